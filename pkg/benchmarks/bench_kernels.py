"""Compare the compiled and pure-Python kernel backends.

Run with ``python benchmarks/bench_kernels.py``.  Reports the median wall time
of r IST steps on one TVARX-sized block (n=20, m=15) and of power iteration,
for every available backend, plus the share of a tracking run spent in the
IST kernel.
"""
import argparse
import json
import time

import numpy as np

from sparsetrack import kernels, online_ist, tvarx
from sparsetrack.elastic_net import ElasticNetParams

BLOCK_BUDGET_SECONDS = 15e-3


def _median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def bench_backend(name, A, y, r, repeat):
    impl = kernels.load_backend(name)
    norm_sq = impl.power_iteration(A, 1e-10, 100_000)[0]
    tau = 0.99 / norm_sq
    x0 = np.zeros(A.shape[1])
    return {
        "ist_block_seconds": _median_time(lambda: impl.ist_steps(A, y, x0, tau, 2e-2, 1e-6, r), repeat),
        "power_iteration_seconds": _median_time(lambda: impl.power_iteration(A, 1e-10, 100_000), repeat),
    }


def tracking_profile(r, seed=0):
    """Total and IST-kernel time for one benchmark-sized tracking run."""
    run = tvarx.simulate(tvarx.benchmark_scenario(seed=seed))
    params = ElasticNetParams(2e-2, 1e-6, 3e-2)
    start = time.perf_counter()
    online_ist.run(run.rounds, params, r=r, rescale_tau=True)
    total = time.perf_counter() - start
    kernel = 0.0
    x = np.zeros(run.rounds[0].n)
    for rnd in run.rounds:
        tau = min(params.tau, 0.99 / rnd.norm_sq)
        start = time.perf_counter()
        x = kernels.ist_steps(rnd.A, rnd.y, x, tau, params.lam, params.mu, r)
        kernel += time.perf_counter() - start
    return {"run_seconds": total, "ist_seconds": kernel, "blocks": len(run.rounds)}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--r", type=int, default=1000)
    parser.add_argument("--repeat", type=int, default=50)
    parser.add_argument("--json", help="also write the results to this file")
    args = parser.parse_args(argv)

    run = tvarx.simulate(tvarx.benchmark_scenario(seed=0))
    rnd = run.rounds[10]
    A, y = np.array(rnd.A), np.array(rnd.y)
    results = {"r": args.r, "n": rnd.n, "m": rnd.m, "selected_backend": kernels.BACKEND, "backends": {}}
    for name in kernels.available_backends():
        repeat = args.repeat if name == "cython" else max(3, args.repeat // 10)
        results["backends"][name] = bench_backend(name, A, y, args.r, repeat)
    results["tracking"] = tracking_profile(args.r)

    for name, res in results["backends"].items():
        verdict = "within" if res["ist_block_seconds"] <= BLOCK_BUDGET_SECONDS else "OVER"
        print(f"{name:>7}: {args.r} IST steps {res['ist_block_seconds'] * 1e3:8.3f} ms "
              f"({verdict} the {BLOCK_BUDGET_SECONDS * 1e3:.0f} ms block budget), "
              f"power iteration {res['power_iteration_seconds'] * 1e3:.3f} ms")
    b = results["backends"]
    if "cython" in b and "python" in b:
        print(f"speedup: {b['python']['ist_block_seconds'] / b['cython']['ist_block_seconds']:.1f}x")
    tr = results["tracking"]
    print(f"tracking run ({tr['blocks']} blocks, backend {kernels.BACKEND}): {tr['run_seconds'] * 1e3:.2f} ms, "
          f"IST kernel share {tr['ist_seconds'] / tr['run_seconds']:.0%}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
