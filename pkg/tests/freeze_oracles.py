"""Regenerate tests/data/oracle_values.json from the reference implementations.

    python tests/freeze_oracles.py

The frozen values are the expected outputs for the regression tests; they
come only from :mod:`oracles` and the documented data-generation protocol.
"""
import json
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
import oracles  # noqa: E402

DATA = Path(__file__).parent / "data" / "oracle_values.json"
REFERENCE_INSTANCES = 200
ENUMERATION_INSTANCES = 40


def reference_instance(seed):
    """Random Elastic-net instance with n <= 20, m <= 15 (shared with the tests)."""
    rng = np.random.default_rng(10_000 + seed)
    m = int(rng.integers(1, 16))
    n = int(rng.integers(1, 21))
    A = rng.standard_normal((m, n)) / math.sqrt(m)
    v = np.zeros(n)
    k = int(rng.integers(1, min(n, 4) + 1))
    v[rng.choice(n, k, replace=False)] = rng.normal(0, 1, k)
    y = A @ v + 0.05 * rng.standard_normal(m)
    lam_max = float(np.max(np.abs(A.T @ y))) or 1.0
    lam = float(rng.uniform(0.01, 0.6) * lam_max)
    mu = float(10 ** rng.uniform(-3, 0))
    return A, y, lam, mu


def enumeration_instance(seed):
    rng = np.random.default_rng(20_000 + seed)
    m = int(rng.integers(1, 7))
    n = int(rng.integers(1, 7))
    A = rng.standard_normal((m, n))
    y = rng.standard_normal(m)
    lam = float(rng.uniform(0.05, 1.0))
    mu = float(10 ** rng.uniform(-4, 0))
    return A, y, lam, mu


def kkt_residual(A, y, x, lam, mu):
    g = A.T @ (A @ x - y) + mu * x
    res = np.where(x != 0, np.abs(g + lam * np.sign(x)), np.maximum(np.abs(g) - lam, 0.0))
    return float(res.max())


def benchmark_run_reference(seed=0):
    """Documented protocol: u from m normals tiled; noise scaled to the exact SNR."""
    rng = np.random.default_rng(seed)
    T, m, fs, snr = 1000, 15, 1000.0, 20.0
    base = rng.standard_normal(m)
    u = np.tile(base, -(-T // m))[:T]
    clean = oracles.tvarx_loop(oracles.step_a1, oracles.step_b1, u, np.zeros(T), fs)
    sigma = math.sqrt(np.mean(clean**2) / 10 ** (snr / 10))
    draw = rng.standard_normal(T)
    e = draw * sigma / math.sqrt(np.mean(draw**2))
    y = oracles.tvarx_loop(oracles.step_a1, oracles.step_b1, u, e, fs)
    return u, y, sigma


def main():
    out = {"reference": [], "enumeration": []}
    for seed in range(REFERENCE_INSTANCES):
        A, y, lam, mu = reference_instance(seed)
        x = oracles.coordinate_descent(A, y, lam, mu)
        res = kkt_residual(A, y, x, lam, mu)
        assert res < 1e-9, (seed, res)
        out["reference"].append({"seed": seed, "minimizer": x.tolist(), "kkt_residual": res})
    for seed in range(ENUMERATION_INSTANCES):
        A, y, lam, mu = enumeration_instance(seed)
        x = oracles.enumerate_minimizer(A, y, lam, mu)
        out["enumeration"].append({"seed": seed, "minimizer": x.tolist()})
    u, y, sigma = benchmark_run_reference(0)
    out["benchmark_run_seed0"] = {
        "u_head": u[:20].tolist(), "y_head": y[:20].tolist(), "y_tail": y[-5:].tolist(),
        "y_sum": float(y.sum()), "sigma": sigma,
    }
    out["closed_form"] = {
        "one_dim_minimizer": 9 / 11,
        "one_dim_first_step": 3 / 7,
    }
    DATA.parent.mkdir(exist_ok=True)
    DATA.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {DATA}")


if __name__ == "__main__":
    main()
