"""Command-line front end: ``sparsetrack {solve,track,tvarx,audit}``.

Exit codes: 0 success, 1 usage/input/dimension error, 2 batch solver did not
converge, 3 minimizer oracle failure, 4 audit check failure, 5 every
Monte-Carlo run failed.
"""
import argparse
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__, online_ist, regret
from .config import ConfigError
from .csvio import FormatError, read_matrix_csv, read_table, read_vector_csv, write_vector_csv
from .elastic_net import (
    RESCALE_SAFETY,
    ElasticNetParams,
    MeasurementRound,
    batch_solve,
    check_step_size,
)
from .errors import (
    AssumptionViolation,
    ConvergenceError,
    OracleFailure,
    ShapeError,
    SparseTrackError,
)
from .experiment import (
    ExperimentConfig,
    audit_outcomes,
    build_audit_stream,
    config_from_mapping,
    load_config,
    regret_curve,
    run_tvarx_experiment,
    stream_params,
    write_json,
)

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_ORACLE, EXIT_AUDIT, EXIT_ALL_FAILED = range(6)


class _Console:
    def __init__(self, quiet):
        self.quiet = quiet

    def __call__(self, msg):
        if not self.quiet:
            print(msg)

    @staticmethod
    def error(msg):
        print(f"sparsetrack: error: {msg}", file=sys.stderr)


def _common(parser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--runs", type=int, help="Monte-Carlo repetitions")
    parser.add_argument("--r", help="IST steps per round (comma-separated list for tvarx)")
    parser.add_argument("--lambda", dest="lam", type=float, help="l1 weight")
    parser.add_argument("--mu", type=float, help="Tikhonov weight")
    parser.add_argument("--tau", type=float, help="IST step size")
    parser.add_argument("--rescale-tau", dest="rescale_tau", action=argparse.BooleanOptionalAction,
                        default=None, help="shrink tau to 0.99/||A_t||^2 on rounds where it is too large")
    parser.add_argument("--bench", action="store_true", help="record wall-clock timing")
    parser.add_argument("--quiet", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="sparsetrack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="batch Elastic-net solve of one (A, y) pair")
    p.add_argument("matrix", help="CSV of A")
    p.add_argument("vector", help="CSV of y")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200_000)
    _common(p)

    p = sub.add_parser("track", help="online IST over a directory of round CSVs")
    p.add_argument("rounds_dir", help="directory of <name>_A.csv / <name>_y.csv pairs")
    p.add_argument("--repeat", type=int, default=1, help="play the stream this many times")
    p.add_argument("--with-x", action="store_true", help="append iterate columns to the trajectory")
    _common(p)

    p = sub.add_parser("tvarx", help="Monte-Carlo TVARX identification experiment")
    p.add_argument("--audit", action="store_true", help="audit the regret bound on every run")
    p.add_argument("--export-rounds", action="store_true", help="dump run 0 (data, rounds, trajectories)")
    _common(p)

    p = sub.add_parser("audit", help="certify the regret bound on a run")
    p.add_argument("--rounds", help="directory of round CSVs (audit a recorded trajectory)")
    p.add_argument("--trajectory", help="trajectory CSV written with --with-x")
    p.add_argument("--truth", help="per-round truth CSV (columns v0..v{n-1})")
    _common(p)
    return parser


def _config(args):
    """Defaults, then the config file, then explicit flags."""
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for flag, key in (("seed", "master_seed"), ("out", "out"), ("runs", "runs"), ("lam", "lam"),
                      ("mu", "mu"), ("tau", "tau"), ("rescale_tau", "rescale_tau")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if args.r is not None:
        overrides["audit_r" if args.command == "audit" else "r"] = args.r
    if getattr(args, "audit", False):
        overrides["audit"] = True
    if getattr(args, "export_rounds", False):
        overrides["export_rounds"] = True
    if args.bench:
        overrides["bench"] = True
    return config_from_mapping(overrides, base=cfg)


def _track_steps(args, config):
    if args.r is None:
        return config.r[0] if len(config.r) == 1 and args.config else 1
    if len(config.r) != 1:
        raise ConfigError("track takes a single --r value")
    return config.r[0]


def cmd_solve(args, config, log):
    A = read_matrix_csv(args.matrix)
    y = read_vector_csv(args.vector)
    if A.shape[0] != y.shape[0]:
        raise ShapeError(f"A has {A.shape[0]} rows but y has {y.shape[0]} entries")
    rnd = MeasurementRound(A, y)
    safe = RESCALE_SAFETY / rnd.norm_sq if rnd.norm_sq > 0 else 1.0
    if args.tau is None:
        tau = safe
    else:
        tau = min(args.tau, safe) if config.rescale_tau else args.tau
    params = ElasticNetParams(config.lam, config.mu, tau)
    check_step_size(params, rnd)
    out = Path(config.out)
    try:
        rep = batch_solve(params, rnd, tol=args.tol, max_iter=args.max_iter)
        code = EXIT_OK
    except ConvergenceError as exc:
        rep = exc.estimate
        code = EXIT_CONVERGENCE
        _Console.error(str(exc))
    out.mkdir(parents=True, exist_ok=True)
    write_vector_csv(out / "minimizer.csv", rep.minimizer)
    write_json(out / "solve_report.json", {
        "converged": code == EXIT_OK, "iterations": rep.iterations,
        "final_step_norm": rep.final_step_norm, "optimality_residual": rep.optimality_residual,
        "tau": params.tau, "lambda": params.lam, "mu": params.mu,
    })
    log(" ".join(f"{v:.6f}" for v in rep.minimizer))
    log(f"iterations {rep.iterations}, optimality residual {rep.optimality_residual:.3g}")
    return code


_ROUND_FILE = re.compile(r"^(?P<stem>.+)_(?P<kind>A|y)\.csv$")


def read_rounds(directory):
    """Rounds from ``<stem>_A.csv`` / ``<stem>_y.csv`` pairs in lexicographic stem order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory} is not a directory")
    pairs = {}
    for path in directory.iterdir():
        m = _ROUND_FILE.match(path.name)
        if m:
            pairs.setdefault(m["stem"], {})[m["kind"]] = path
    rounds = []
    n = None
    for i, stem in enumerate(sorted(pairs), start=1):
        files = pairs[stem]
        if set(files) != {"A", "y"}:
            raise ShapeError(f"round {i} ({stem}): missing {'y' if 'A' in files else 'A'} file")
        A = read_matrix_csv(files["A"])
        y = read_vector_csv(files["y"])
        if A.shape[0] != y.shape[0]:
            raise ShapeError(f"round {i} ({stem}): A has {A.shape[0]} rows, y has {y.shape[0]}")
        if n is not None and A.shape[1] != n:
            raise ShapeError(f"round {i} ({stem}): A has {A.shape[1]} columns, earlier rounds {n}")
        n = A.shape[1]
        rounds.append(MeasurementRound(A, y, t=i))
    return rounds


def cmd_track(args, config, log):
    r = _track_steps(args, config)
    base = read_rounds(args.rounds_dir)
    if args.repeat < 1:
        raise ConfigError("--repeat must be at least 1")
    stream = [MeasurementRound(rnd.A, rnd.y, t=k * len(base) + rnd.t)
              for k in range(args.repeat) for rnd in base]
    outcomes = online_ist.run(stream, config.params, r=r, rescale_tau=config.rescale_tau)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    online_ist.write_trajectory(out / "trajectory.csv", outcomes, include_x=args.with_x)
    log(f"{len(outcomes)} rounds tracked")
    if outcomes:
        log("final iterate: " + " ".join(f"{v:.6f}" for v in outcomes[-1].action_after))
    return EXIT_OK


def _outcomes_from_trajectory(path, stream, steps):
    header, data = read_table(path)
    data = np.atleast_2d(data)
    xcols = [i for i, h in enumerate(header) if re.fullmatch(r"x\d+", h)]
    if not xcols:
        raise FormatError(f"{path}: trajectory has no x columns (write it with --with-x)")
    if data.shape[0] != len(stream):
        raise ShapeError(f"{path}: {data.shape[0]} trajectory rows for {len(stream)} rounds")
    tau_col = header.index("tau")
    X = data[:, xcols]
    if X.shape[1] != stream[0].n:
        raise ShapeError(f"{path}: iterates have {X.shape[1]} entries, rounds have {stream[0].n} columns")
    prev = np.zeros(X.shape[1])
    outcomes = []
    for t, (row, x) in enumerate(zip(data, X), start=1):
        outcomes.append(online_ist.RoundOutcome(
            t=t, action_before=prev, action_after=x.copy(), loss_before=np.nan, loss_after=np.nan,
            tau=float(row[tau_col]), steps=steps))
        prev = x.copy()
    return outcomes


def _read_truth(path):
    header, data = read_table(path)
    data = np.atleast_2d(data)
    cols = [i for i, h in enumerate(header) if re.fullmatch(r"v\d+", h)]
    return data[:, cols]


def cmd_audit(args, config, log):
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.rounds or args.trajectory:
        if not (args.rounds and args.trajectory):
            raise ConfigError("--rounds and --trajectory go together")
        stream = read_rounds(args.rounds)
        truth = _read_truth(args.truth) if args.truth else None
        (steps,) = config.audit_r[:1]
        runs = {steps: _outcomes_from_trajectory(args.trajectory, stream, steps)}
        params, label = config.params, "files"
    else:
        stream, truth, label = build_audit_stream(config)
        params = stream_params(config, stream)
        runs = {r: online_ist.run(stream, params, r=r, rescale_tau=config.rescale_tau)
                for r in config.audit_r}
    try:
        z_path = regret.minimizer_path(stream, params, oracle_tol=config.oracle_tol)
    except OracleFailure as exc:
        _Console.error(str(exc))
        write_json(out / "audit.json", {"source": label, "passed": False, "oracle_failure": str(exc)})
        return EXIT_ORACLE
    result = {"source": label, "T": len(stream), "runs": {}}
    passed = True
    for r, outcomes in runs.items():
        ledger, reports = audit_outcomes(outcomes, stream, params, truth, config.oracle_tol, z_path=z_path)
        ledger.write_csv(out / f"ledger_r{r}.csv")
        curve = regret_curve(ledger)
        entry = {variant: rep.to_dict() for variant, rep in reports.items()}
        entry["regret_curve_last"] = float(curve[-1])
        entry["regret_curve_midpoint"] = float(curve[len(curve) // 2])
        result["runs"][r] = entry
        rep = reports["re-derived"]
        passed &= rep.passed
        status = "PASS" if rep.passed else "FAIL (" + ", ".join(rep.failed_checks()) + ")"
        original = reports["original"]
        log(f"r={r}: regret {rep.regret:.6g}, bound {rep.bound:.6g}: {status}; "
            f"original constants {'pass' if original.passed else 'fail: ' + ', '.join(original.failed_checks())}")
    result["passed"] = bool(passed)
    write_json(out / "audit.json", result)
    return EXIT_OK if passed else EXIT_AUDIT


def cmd_tvarx(args, config, log):
    summary = run_tvarx_experiment(config, log=log)
    return EXIT_ALL_FAILED if summary.all_failed else EXIT_OK


COMMANDS = {"solve": cmd_solve, "track": cmd_track, "tvarx": cmd_tvarx, "audit": cmd_audit}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    log = _Console(args.quiet)
    try:
        config = _config(args)
        return COMMANDS[args.command](args, config, log)
    except (OSError, FormatError, ConfigError, ShapeError, AssumptionViolation) as exc:
        _Console.error(str(exc))
        return EXIT_INPUT
    except OracleFailure as exc:
        _Console.error(str(exc))
        return EXIT_ORACLE
    except SparseTrackError as exc:
        _Console.error(f"{type(exc).__name__}: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
