"""Monte-Carlo TVARX experiments and regret audits behind the command line."""
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import online_ist, regret, tvarx
from .config import ConfigError, coerce, load_flat
from .csvio import write_matrix_csv, write_table, write_vector_csv
from .elastic_net import ElasticNetParams, MeasurementRound
from .errors import InvalidParameterError, SparseTrackError
from .streams import random_stream, static_stream, uniform_tau

THREADS_ENV = "SPARSETRACK_THREADS"
STREAM_KINDS = ("tvarx", "static", "random")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: tvarx.TvarxScenario = field(default_factory=tvarx.benchmark_scenario)
    lam: float = 2e-2
    mu: float = 1e-6
    tau: float = 3e-2
    r: tuple = (100, 1000)
    runs: int = 250
    master_seed: int = 0
    out: str = "sparsetrack_out"
    audit: bool = False
    oracle_tol: float = regret.DEFAULT_ORACLE_TOL
    rescale_tau: bool = True
    export_rounds: bool = False
    bench: bool = False
    audit_r: tuple = (1,)
    stream: str = "tvarx"
    stream_n: int = 12
    stream_m: int = 8
    stream_t: int = 200
    stream_seed: int = 0

    def __post_init__(self):
        if self.runs < 1:
            raise InvalidParameterError("runs must be at least 1")
        if not self.r or any(int(k) < 1 for k in self.r):
            raise InvalidParameterError("r must be a non-empty list of positive step counts")
        if self.stream not in STREAM_KINDS:
            raise InvalidParameterError(f"stream must be one of {STREAM_KINDS}")
        self.params  # validates lam, mu, tau

    @property
    def params(self):
        return ElasticNetParams(self.lam, self.mu, self.tau)

    def to_mapping(self):
        return {
            "lambda": self.lam, "mu": self.mu, "tau": self.tau, "r": list(self.r),
            "runs": self.runs, "master_seed": self.master_seed, "audit": self.audit,
            "oracle_tol": self.oracle_tol, "rescale_tau": self.rescale_tau,
            "audit_r": list(self.audit_r), "stream": self.stream,
            "scenario": self.scenario.to_mapping(),
        }


_ALIASES = {"lambda": "lam", "seed": "master_seed"}
_INT_KEYS = ("runs", "master_seed", "stream_n", "stream_m", "stream_t", "stream_seed")
_FLOAT_KEYS = ("lam", "mu", "tau", "oracle_tol")
_BOOL_KEYS = ("audit", "rescale_tau", "export_rounds", "bench")


def _int_list(value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (int(value),)
    if isinstance(value, str):
        try:
            return tuple(int(v) for v in value.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"expected a list of integers, got {value!r}") from None
    return tuple(int(v) for v in value)


def config_from_mapping(raw, base=None):
    """Build a config from flat raw strings (file contents or CLI overrides)."""
    base = ExperimentConfig() if base is None else base
    updates = {}
    scenario_keys = {}
    for key, value in raw.items():
        key = _ALIASES.get(key.lower(), key.lower())
        if key in tvarx.SCENARIO_KEYS:
            scenario_keys[key] = value
            continue
        parsed = coerce(value) if isinstance(value, str) else value
        try:
            if key == "scenario":
                updates["scenario"] = tvarx.load_scenario(value)
            elif key in ("r", "audit_r"):
                updates[key] = _int_list(parsed)
            elif key in _INT_KEYS:
                updates[key] = int(parsed)
            elif key in _FLOAT_KEYS:
                updates[key] = float(parsed)
            elif key in _BOOL_KEYS:
                if not isinstance(parsed, bool):
                    raise ConfigError(f"{key} must be true or false")
                updates[key] = parsed
            elif key in ("out", "stream"):
                updates[key] = str(parsed)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    if scenario_keys:
        updates["scenario"] = tvarx.scenario_from_mapping(
            scenario_keys, base=updates.get("scenario", base.scenario))
    return replace(base, **updates)


def load_config(path, base=None):
    return config_from_mapping(load_flat(path), base=base)


def worker_count(runs):
    cap = os.environ.get(THREADS_ENV)
    try:
        cap = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError:
        cap = 1
    return max(1, min(cap, runs))


def _run_one(job):
    scenario, seed, lam, mu, tau, rs, rescale, keep, bench = job
    params = ElasticNetParams(lam, mu, tau)
    sc = scenario.with_seed(seed)
    try:
        run = tvarx.simulate(sc)
    except SparseTrackError as exc:
        return {"seed": seed, "error": f"{type(exc).__name__}: {exc}"}
    out = {"seed": seed, "error": None, "per_r": {}}
    if keep:
        out["run"] = run
    for r in rs:
        start = time.perf_counter()
        try:
            outcomes = online_ist.run(run.rounds, params, r=r, rescale_tau=rescale)
        except SparseTrackError as exc:
            return {"seed": seed, "error": f"r={r}: {type(exc).__name__}: {exc}"}
        elapsed = time.perf_counter() - start
        est = np.array([o.action_after for o in outcomes]).reshape(len(outcomes), sc.n)
        err = tvarx.support_error(run.v_path, est)
        null_err, active_err = tvarx.support_split(err, sc.active_indices)
        entry = {
            "mse": tvarx.block_mse(run.v_path, est, sc.p_est, sc.q_est),
            "mse_sum": tvarx.mse(run.v_path, est, sc.p_est, sc.q_est),
            "null_err": null_err,
            "active_err": active_err,
        }
        if bench:
            entry["block_seconds"] = elapsed / max(len(outcomes), 1)
        if keep:
            entry["outcomes"] = outcomes
            entry["estimates"] = est
        out["per_r"][r] = entry
    return out


def _stats(values):
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return math.nan, math.nan
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(np.mean(values)), std


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def export_rounds(directory, rounds):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for rnd in rounds:
        a = directory / f"round_{rnd.t:05d}_A.csv"
        y = directory / f"round_{rnd.t:05d}_y.csv"
        write_matrix_csv(a, rnd.A)
        write_vector_csv(y, rnd.y)
        paths += [a, y]
    return paths


@dataclass
class ExperimentSummary:
    per_r: dict
    failures: list
    manifest: list
    runs: int
    audit: dict = None

    @property
    def all_failed(self):
        return len(self.failures) == self.runs


def run_tvarx_experiment(config, log=print):
    """Monte-Carlo sweep; writes the CSV/JSON artifacts into ``config.out``."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    rs = tuple(int(k) for k in config.r)
    jobs = [
        (config.scenario, config.master_seed + i, config.lam, config.mu, config.tau, rs,
         config.rescale_tau, i == 0, config.bench)
        for i in range(config.runs)
    ]
    workers = worker_count(config.runs)
    if workers == 1:
        results = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, config.runs // (4 * workers))))

    manifest = []
    failures = [
        {"run": i, "seed": res["seed"], "error": res["error"]}
        for i, res in enumerate(results) if res["error"]
    ]
    rows = []
    per_r = {}
    for r in rs:
        mses, sums, ok_support = [], [], []
        for i, res in enumerate(results):
            if res["error"]:
                rows.append([i, res["seed"], r, 1, math.nan, math.nan, math.nan, math.nan, 0])
                continue
            e = res["per_r"][r]
            support_ok = int(e["null_err"] < e["active_err"])
            rows.append([i, res["seed"], r, 0, e["mse"], e["mse_sum"], e["null_err"], e["active_err"], support_ok])
            mses.append(e["mse"])
            sums.append(e["mse_sum"])
            ok_support.append(support_ok)
        mean, std = _stats(mses)
        mean_sum, std_sum = _stats(sums)
        per_r[r] = {
            "mean_mse": mean, "std_mse": std,
            "mean_mse_unnormalized": mean_sum, "std_mse_unnormalized": std_sum,
            "runs_ok": len(mses),
            "support_detection_fraction": float(np.mean(ok_support)) if ok_support else math.nan,
        }
    runs_csv = out / "runs.csv"
    write_table(runs_csv, ["run", "seed", "r", "failed", "mse", "mse_unnormalized",
                           "null_abs_error", "active_abs_error", "support_ok"], rows)
    table = out / "table1.csv"
    write_table(table, ["r", "mean_mse", "std_mse", "mean_mse_unnormalized", "std_mse_unnormalized", "runs_ok"],
                [[r, v["mean_mse"], v["std_mse"], v["mean_mse_unnormalized"], v["std_mse_unnormalized"], v["runs_ok"]]
                 for r, v in per_r.items()])
    manifest += [runs_csv.name, table.name]

    first = results[0]
    sc0 = config.scenario.with_seed(config.master_seed)
    if not first["error"]:
        fig1, fig2 = [], []
        for r in rs:
            est = first["per_r"][r]["estimates"]
            fig1 += tvarx.fig1_rows(sc0, est, r)
            fig2 += tvarx.fig2_rows(sc0, est, r)
        write_table(out / "fig1.csv", ["r", "t_seconds", "a1_true", "a1_est", "b1_true", "b1_est"], fig1)
        write_table(out / "fig2.csv", ["component_index", "block", "signed_error", "r"], fig2)
        manifest += ["fig1.csv", "fig2.csv"]
        if config.export_rounds:
            run0 = first["run"]
            paths = tvarx.write_run(run0, sc0, out / "run0")
            paths += export_rounds(out / "run0" / "rounds", run0.rounds)
            for r in rs:
                p = out / "run0" / f"trajectory_r{r}.csv"
                online_ist.write_trajectory(p, first["per_r"][r]["outcomes"], include_x=True)
                paths.append(p)
            manifest += sorted(str(p.relative_to(out)) for p in paths)

    audit_counts = None
    if config.audit:
        audit_counts = {}
        for r in rs:
            audit_counts[r] = {"passed": 0, "failed": 0, "oracle_failures": 0}
        for i, res in enumerate(results):
            if res["error"]:
                continue
            sc = config.scenario.with_seed(config.master_seed + i)
            run = tvarx.simulate(sc)
            try:
                z_path = regret.minimizer_path(run.rounds, config.params, oracle_tol=config.oracle_tol)
            except SparseTrackError:
                for r in rs:
                    audit_counts[r]["oracle_failures"] += 1
                continue
            for r in rs:
                outcomes = online_ist.run(run.rounds, config.params, r=r, rescale_tau=config.rescale_tau)
                rep = regret.audit(outcomes, run.rounds, config.params, truth=run.v_path,
                                   variant="re-derived", z_path=z_path)
                audit_counts[r]["passed" if rep.passed else "failed"] += 1

    if config.bench:
        timing = {r: float(np.mean([res["per_r"][r]["block_seconds"] for res in results if not res["error"]]))
                  if any(not res["error"] for res in results) else math.nan for r in rs}
        write_json(out / "timing.json", {"mean_block_seconds": timing, "backend": _backend()})
        manifest.append("timing.json")

    manifest.append("summary.json")
    summary = ExperimentSummary(per_r=per_r, failures=failures, manifest=manifest,
                                runs=config.runs, audit=audit_counts)
    write_json(out / "summary.json", {
        "config": config.to_mapping(),
        "per_r": per_r,
        "failures": failures,
        "audit": audit_counts,
        "manifest": manifest,
    })
    for r, v in per_r.items():
        log(f"r={r}: mean MSE {v['mean_mse']:.6g} (std {v['std_mse']:.3g}) over {v['runs_ok']} runs, "
            f"support detected in {v['support_detection_fraction']:.1%}")
    if failures:
        log(f"{len(failures)} of {config.runs} runs failed")
    return summary


def _backend():
    from . import kernels
    return kernels.BACKEND


def build_audit_stream(config):
    """``(stream, truth, label)`` for the configured audit stream kind."""
    if config.stream == "tvarx":
        run = tvarx.simulate(config.scenario.with_seed(config.master_seed))
        return run.rounds, run.v_path, "tvarx"
    rng = np.random.default_rng(config.stream_seed)
    n, m, T = config.stream_n, config.stream_m, config.stream_t
    if config.stream == "static":
        A = rng.standard_normal((m, n)) / np.sqrt(m)
        v = np.zeros(n)
        k = min(3, n)
        v[rng.choice(n, k, replace=False)] = rng.uniform(0.5, 1.5, k)
        return static_stream(A, A @ v, T), np.tile(v, (T, 1)), "static"
    stream, truth = random_stream(rng, n, m, T)
    return stream, truth, "random"


def stream_params(config, stream):
    """Solver parameters for an audit stream; synthetic streams get a valid uniform step."""
    params = config.params
    if config.stream != "tvarx" and config.rescale_tau:
        params = params.with_tau(min(params.tau, uniform_tau(stream)))
    return params


def audit_outcomes(outcomes, stream, params, truth, oracle_tol, z_path=None):
    """Audit one run under both constant variants; returns ``{variant: AuditReport}``."""
    ledger = regret.build_ledger(outcomes, stream, params, truth=truth, z_path=z_path,
                                 oracle_tol=oracle_tol)
    return ledger, {v: regret.audit_ledger(ledger, v) for v in regret.VARIANTS}


def regret_curve(ledger):
    """Cumulative regret after every round (used to show a plateau on static streams)."""
    return np.cumsum(ledger.gap)


def rounds_from_arrays(arrays):
    return [MeasurementRound(A, y, t=i) for i, (A, y) in enumerate(arrays, start=1)]
