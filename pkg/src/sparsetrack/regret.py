"""Dynamic regret of online IST and a certificate check of its regret bound.

Indexing convention
-------------------
The regret bound is proved for the action *played* against ``f_t``: the
iterate held when round ``t`` arrives (``RoundOutcome.action_before``).  With
that reading each bound step holds::

    ||x_{t+1} - z_t||    <= q^r ||x_t - z_t||,          q = 1 / (1 + mu tau)
    ||x_t - z_t||        <= q ||x_{t-1} - z_{t-1}|| + D_t,  D_t = ||z_t - z_{t-1}||
    f_{t-1}(x_t) - f_{t-1}(z_{t-1}) <= ||x_{t-1} - z_{t-1}||^2 / tau

The ledger therefore scores ``x_t = action_before``; the regret of the
post-update iterates is reported alongside for comparison.

Two sets of constants are produced.  ``"original"`` evaluates the closed
forms in their original form.  ``"re-derived"`` re-sums the same per-round
inequalities; it differs in ``c3``, ``c4``, ``c5`` and ``alpha0`` and is the
variant whose inequalities are guaranteed to hold.

Audit checks: ``step_condition``, ``oracle_residual``, ``gap_nonnegative``,
``contraction`` (per round, ``q_t^r``), ``error_recursion``, ``error_sum``,
``error_sq_sum``, ``previous_round_gap``, ``loss_drift``, ``regret_bound``
and, when the true parameters are known, ``minimizer_drift_bound``
(``Delta_t <= theta_t``).
"""
from dataclasses import asdict, dataclass, field

import numpy as np

from .csvio import write_table
from .elastic_net import RESCALE_SAFETY, STEP_EPS, batch_solve, cost, optimality_residual
from .errors import (
    ConvergenceError,
    InvalidParameterError,
    OracleFailure,
    ShapeError,
    UnsupportedOperation,
)
from .numerics import spectral_norm

DEFAULT_ORACLE_TOL = 1e-10
RESIDUAL_BOUND = 1e-7
DEFAULT_SLACK = 1e-8
VARIANTS = ("original", "re-derived")
_ULP = np.finfo(np.float64).eps


def _norm(v):
    return float(np.sqrt(np.dot(v, v)))


def _oracle_params(params, rnd):
    # the minimizer does not depend on tau, so the oracle takes the largest safe step
    if rnd.norm_sq == 0.0:
        return params
    return params.with_tau(RESCALE_SAFETY / rnd.norm_sq)


def _same_data(a, b):
    return a.A.shape == b.A.shape and np.array_equal(a.A, b.A) and np.array_equal(a.y, b.y)


def minimizer_path(stream, params, oracle_tol=DEFAULT_ORACLE_TOL, warm_start=True,
                   residual_bound=RESIDUAL_BOUND):
    """Per-round Elastic-net minimizers ``z_t`` from the batch solver."""
    if not oracle_tol > 0:
        raise InvalidParameterError("oracle_tol must be positive")
    path = []
    prev = None
    prev_rnd = None
    for i, rnd in enumerate(stream, start=1):
        if prev_rnd is not None and _same_data(prev_rnd, rnd):
            # the minimizer is unique, so repeated data reuses it exactly
            path.append(prev)
            continue
        prev_rnd = rnd
        x0 = prev if (warm_start and prev is not None and prev.shape[0] == rnd.n) else None
        try:
            rep = batch_solve(_oracle_params(params, rnd), rnd, x0=x0, tol=oracle_tol)
        except ConvergenceError as exc:
            raise OracleFailure(f"minimizer oracle failed on round {i}: {exc}", round_index=i) from exc
        if rep.optimality_residual > residual_bound:
            raise OracleFailure(
                f"round {i}: optimality residual {rep.optimality_residual:.3g} exceeds {residual_bound:g}",
                round_index=i,
            )
        prev = rep.minimizer
        path.append(rep.minimizer)
    return path


def regret_gaps(trajectory, z_path, params, stream):
    """Per-round gaps ``f_t(x_t) - f_t(z_t)``."""
    stream = list(stream)
    if not (len(trajectory) == len(z_path) == len(stream)):
        raise ShapeError(
            f"length mismatch: {len(trajectory)} iterates, {len(z_path)} minimizers, {len(stream)} rounds"
        )
    return np.array(
        [cost(params, rnd, x) - cost(params, rnd, z) for x, z, rnd in zip(trajectory, z_path, stream)]
    )


def dynamic_regret(trajectory, z_path, params, stream):
    """Sum over rounds of ``f_t(x_t) - f_t(z_t)``."""
    return float(np.sum(regret_gaps(trajectory, z_path, params, stream)))


def step_lengths(z_path):
    """``Delta_t = ||z_t - z_{t-1}||`` for t = 2..T."""
    z = np.asarray(z_path, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] < 2:
        return np.zeros(0)
    return np.sqrt(np.sum(np.diff(z, axis=0) ** 2, axis=1))


def path_length(z_path):
    """``(sum Delta_t, sum Delta_t^2)`` over t = 2..T."""
    if len(z_path) < 2:
        raise ShapeError("path length needs at least two points")
    d = step_lengths(z_path)
    return float(d.sum()), float((d * d).sum())


def _op_norm(M):
    if not np.any(M):
        return 0.0
    try:
        return spectral_norm(M)
    except ConvergenceError:
        return float(np.linalg.norm(M, 2))


def theta_path(stream, truth, params, z_M, v_M):
    """Upper bounds on ``Delta_t`` from the drift of ``A_t^T A_t`` and ``v_t`` (t = 2..T)."""
    stream = list(stream)
    if truth is None:
        raise UnsupportedOperation("theta needs the true parameter path v_t")
    truth = np.asarray(truth, dtype=np.float64)
    if truth.shape[0] != len(stream):
        raise ShapeError(f"{truth.shape[0]} truth vectors for {len(stream)} rounds")
    out = []
    for t in range(1, len(stream)):
        drift = _op_norm(stream[t].gram - stream[t - 1].gram)
        out.append(
            (z_M + v_M) * drift / params.mu
            + _norm(truth[t] - truth[t - 1]) / (params.mu * params.tau)
        )
    return np.array(out)


@dataclass
class BoundConstants:
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    gamma1: float
    gamma2: float
    alpha0: float
    alpha1: float
    alpha2: float
    variant: str
    tau: float
    mu: float
    z_M: float
    v_M: float

    def rhs(self, sum_delta, sum_delta_sq):
        return self.alpha0 + self.alpha1 * sum_delta + self.alpha2 * sum_delta_sq


def bound_constants(trajectory, z_path, params, z_M, v_M, variant="re-derived", first_gap=None):
    """Evaluate the bound constants on a recorded run.

    ``trajectory`` holds the played actions ``x_1..x_T``.  The re-derived
    ``alpha0`` also needs ``first_gap = f_1(x_1) - f_1(z_1)``, the one round the
    summed inequalities do not cover.
    """
    if variant not in VARIANTS:
        raise InvalidParameterError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if len(trajectory) != len(z_path) or not len(trajectory):
        raise ShapeError("trajectory and minimizer path must be non-empty and of equal length")
    tau, mu = params.tau, params.mu
    mt = mu * tau
    e1 = _norm(np.asarray(trajectory[0]) - z_path[0])
    eT = _norm(np.asarray(trajectory[-1]) - z_path[-1])
    c1 = (e1 - eT) / mt
    c2 = (1.0 + mt) / mt
    gamma1 = (2.0 * v_M + 2.0 * z_M) / tau
    gamma2 = 1.0 / tau
    inv = 1.0 / tau + gamma2
    if variant == "original":
        c3 = (e1**2 - eT**2) / (mt * (mt + 2.0)) + 4.0 * z_M / (1.0 + mt) * (e1 - eT)
        c4 = (1.0 + mu * tau**2) / (mt * (mt + 2.0))
        c5 = 4.0 * z_M / (1.0 + mt)
        alpha0 = inv + gamma1 * c1 + c3 + (e1**2 - eT**2) / tau
        alpha1 = inv * c5 + gamma1 * c2
    else:
        if first_gap is None:
            raise InvalidParameterError("the re-derived constants need first_gap")
        # 1/(1-q^2) and q/(1-q^2) for q = 1/(1+mu tau)
        k_sq = (1.0 + mt) ** 2 / (mt * (mt + 2.0))
        k_lin = 4.0 * z_M * (1.0 + mt) / (mt * (mt + 2.0))
        c3 = (e1**2 - eT**2) / (mt * (mt + 2.0)) + k_lin * (c1 + e1 - eT)
        c4 = k_sq
        c5 = k_lin * c2
        alpha0 = first_gap + gamma1 * c1 + inv * c3 + (e1**2 - eT**2) / tau
        alpha1 = gamma1 * c2 + inv * c5
    alpha2 = inv * c4
    return BoundConstants(
        c1=c1, c2=c2, c3=c3, c4=c4, c5=c5, gamma1=gamma1, gamma2=gamma2,
        alpha0=alpha0, alpha1=alpha1, alpha2=alpha2, variant=variant,
        tau=tau, mu=mu, z_M=z_M, v_M=v_M,
    )


@dataclass
class RegretLedger:
    """Per-round record of a run scored against the minimizer path.

    Arrays are indexed by round (``t = 1..T`` at positions ``0..T-1``);
    ``delta`` and ``theta`` are NaN at ``t = 1``.
    """

    stream: list
    params: object
    played: np.ndarray
    updated: np.ndarray
    z: np.ndarray
    taus: np.ndarray
    steps: int
    f_x: np.ndarray
    f_z: np.ndarray
    f_updated: np.ndarray
    delta: np.ndarray
    theta: np.ndarray
    truth: np.ndarray = None
    v_M: float = None
    z_M: float = 0.0
    residuals: np.ndarray = None

    @property
    def T(self):
        return len(self.stream)

    @property
    def gap(self):
        return self.f_x - self.f_z

    @property
    def regret_total(self):
        return float(np.sum(self.gap))

    @property
    def regret_after(self):
        return float(np.sum(self.f_updated - self.f_z))

    @property
    def errors(self):
        return np.sqrt(np.sum((self.played - self.z) ** 2, axis=1))

    def write_csv(self, path):
        rows = zip(range(1, self.T + 1), self.f_x, self.f_z, self.gap, self.delta, self.theta)
        write_table(path, ["t", "f_x", "f_z", "gap", "delta", "theta"], rows)


def build_ledger(outcomes, stream, params, truth=None, z_path=None, z_M=None,
                 oracle_tol=DEFAULT_ORACLE_TOL):
    """Score a run: minimizer path, gaps, path lengths and (with truth) theta."""
    stream = list(stream)
    if len(outcomes) != len(stream):
        raise ShapeError(f"{len(outcomes)} outcomes for {len(stream)} rounds")
    if not stream:
        raise ShapeError("cannot build a ledger for an empty stream")
    if z_path is None:
        z_path = minimizer_path(stream, params, oracle_tol=oracle_tol)
    z = np.array(z_path, dtype=np.float64)
    if z.shape[0] != len(stream):
        raise ShapeError(f"{z.shape[0]} minimizers for {len(stream)} rounds")
    played = np.array([o.action_before for o in outcomes])
    updated = np.array([o.action_after for o in outcomes])
    taus = np.array([o.tau for o in outcomes])
    z_norm = float(np.max(np.sqrt(np.sum(z * z, axis=1))))
    if z_M is None:
        z_M = z_norm
    elif z_M < z_norm * (1.0 - 1e-12):
        raise InvalidParameterError(f"z_M={z_M:.6g} is below max ||z_t|| = {z_norm:.6g}")
    f_x = np.array([cost(params, r, x) for r, x in zip(stream, played)])
    f_z = np.array([cost(params, r, zz) for r, zz in zip(stream, z)])
    f_up = np.array([cost(params, r, x) for r, x in zip(stream, updated)])
    delta = np.concatenate([[np.nan], step_lengths(z)])
    theta = np.full(len(stream), np.nan)
    v_M = None
    if truth is not None:
        truth = np.asarray(truth, dtype=np.float64)
        v_M = float(np.max(np.sqrt(np.sum(truth * truth, axis=1))))
        tau_eff = min(params.tau, float(taus.min()))
        if len(stream) > 1:
            theta[1:] = theta_path(stream, truth, params.with_tau(tau_eff), z_M, v_M)
    residuals = np.array([optimality_residual(params, r, zz) for r, zz in zip(stream, z)])
    return RegretLedger(
        stream=stream, params=params, played=played, updated=updated, z=z, taus=taus,
        steps=int(outcomes[0].steps), f_x=f_x, f_z=f_z, f_updated=f_up, delta=delta,
        theta=theta, truth=truth, v_M=v_M, z_M=z_M, residuals=residuals,
    )


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    worst_round: int = None
    detail: str = ""


@dataclass
class AuditReport:
    variant: str
    checks: dict
    constants: BoundConstants
    regret: float
    regret_after: float
    bound: float
    sum_delta: float
    sum_delta_sq: float
    tau_eff: float
    steps: int
    T: int
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values() if c.passed is not None)

    def failed_checks(self):
        return [name for name, c in self.checks.items() if c.passed is False]

    def to_dict(self):
        return {
            "variant": self.variant,
            "passed": self.passed,
            "T": self.T,
            "steps_per_round": self.steps,
            "tau_eff": self.tau_eff,
            "regret": self.regret,
            "regret_after_update": self.regret_after,
            "bound_rhs": self.bound,
            "sum_delta": self.sum_delta,
            "sum_delta_sq": self.sum_delta_sq,
            "checks": {name: asdict(c) for name, c in self.checks.items()},
            "constants": asdict(self.constants),
            **self.extras,
        }


def _cumulative(name, lhs, terms, slack):
    # terms are summed into the right-hand side; a few ulps of the operand
    # magnitudes are allowed for rounding in the huge constants
    rhs = float(np.sum(terms))
    guard = 8 * _ULP * (abs(lhs) + float(np.sum(np.abs(terms))))
    margin = rhs - lhs
    return CheckResult(name, bool(margin >= -(slack + guard)), float(margin), None,
                       f"lhs={lhs:.6g} rhs={rhs:.6g}")


def _per_round(name, lhs, rhs, slack, first_round):
    lhs = np.asarray(lhs, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if lhs.size == 0:
        return CheckResult(name, True, float("inf"), None, "no rounds")
    guard = 8 * _ULP * (np.abs(lhs) + np.abs(rhs))
    margins = rhs - lhs
    ok = margins >= -(slack + guard)
    worst = int(np.argmin(margins))
    fails = np.flatnonzero(~ok)
    detail = "" if ok.all() else "failing rounds: " + ",".join(str(int(i) + first_round) for i in fails[:20])
    return CheckResult(name, bool(ok.all()), float(margins[worst]), worst + first_round, detail)


def _half_sq_residual(rnd, x):
    r = rnd.A @ x - rnd.y
    return 0.5 * float(r @ r)


def audit_ledger(ledger, variant="re-derived", slack=DEFAULT_SLACK):
    """Check every intermediate inequality, the regret bound and (with truth) the drift bound."""
    if variant not in VARIANTS:
        raise InvalidParameterError(f"variant must be one of {VARIANTS}, got {variant!r}")
    stream, params = ledger.stream, ledger.params
    T = ledger.T
    r = ledger.steps
    tau_eff = min(params.tau, float(ledger.taus.min()))
    p_eff = params.with_tau(tau_eff)
    data_v = tau_eff * max(_norm(rnd.correlation) for rnd in stream)
    if variant == "re-derived":
        v_M = max(ledger.v_M or 0.0, data_v)
    else:
        v_M = ledger.v_M if ledger.v_M is not None else data_v
    z_M = ledger.z_M
    e = ledger.errors
    d = ledger.delta[1:]
    sum_d = float(d.sum()) if T > 1 else 0.0
    sum_d2 = float((d * d).sum()) if T > 1 else 0.0
    k = bound_constants(ledger.played, ledger.z, p_eff, z_M, v_M, variant,
                        first_gap=float(ledger.gap[0]))
    checks = {}

    ratios = np.array([tau_eff * rnd.norm_sq for rnd in stream])
    checks["step_condition"] = _per_round("step_condition", ratios, np.ones(T), STEP_EPS, 1)
    checks["oracle_residual"] = _per_round(
        "oracle_residual", ledger.residuals, np.full(T, RESIDUAL_BOUND), 0.0, 1)
    checks["gap_nonnegative"] = _per_round("gap_nonnegative", -ledger.gap, np.zeros(T), slack, 1)

    q_t = 1.0 / (1.0 + params.mu * ledger.taus)
    after = np.sqrt(np.sum((ledger.updated - ledger.z) ** 2, axis=1))
    before = np.sqrt(np.sum((ledger.played - ledger.z) ** 2, axis=1))
    checks["contraction"] = _per_round("contraction", after, q_t**r * before, slack, 1)

    q = p_eff.contraction
    checks["error_recursion"] = _per_round("error_recursion", e[1:], q * e[:-1] + d, slack, 2)
    checks["error_sum"] = _cumulative("error_sum", float(e[1:].sum()), [k.c1, k.c2 * sum_d], T * slack)
    checks["error_sq_sum"] = _cumulative(
        "error_sq_sum", float((e[1:] ** 2).sum()), [k.c3, k.c4 * sum_d2, k.c5 * sum_d], T * slack)

    lem3_lhs, lem3_rhs, lem4_lhs, lem4_rhs = [], [], [], []
    for t in range(1, T):
        prev, cur = stream[t - 1], stream[t]
        x_t, z_t, z_prev = ledger.played[t], ledger.z[t], ledger.z[t - 1]
        lem3_lhs.append(cost(params, prev, x_t) - cost(params, prev, z_prev))
        lem3_rhs.append(e[t - 1] ** 2 / ledger.taus[t - 1])
        d_x = _half_sq_residual(cur, x_t) - _half_sq_residual(prev, x_t)
        d_z = _half_sq_residual(cur, z_t) - _half_sq_residual(prev, z_t)
        lem4_lhs.append(d_x - d_z)
        lem4_rhs.append(k.gamma1 * e[t] + k.gamma2 * e[t] ** 2)
    checks["previous_round_gap"] = _per_round("previous_round_gap", lem3_lhs, lem3_rhs, slack, 2)
    checks["loss_drift"] = _per_round("loss_drift", lem4_lhs, lem4_rhs, slack, 2)

    bound = k.rhs(sum_d, sum_d2)
    checks["regret_bound"] = _cumulative(
        "regret_bound", ledger.regret_total, [k.alpha0, k.alpha1 * sum_d, k.alpha2 * sum_d2], T * slack)
    if ledger.truth is not None and T > 1:
        checks["minimizer_drift_bound"] = _per_round("minimizer_drift_bound", d, ledger.theta[1:], slack, 2)
    else:
        checks["minimizer_drift_bound"] = CheckResult("minimizer_drift_bound", None, float("nan"), None, "no truth available")

    return AuditReport(
        variant=variant, checks=checks, constants=k, regret=ledger.regret_total,
        regret_after=ledger.regret_after, bound=float(bound), sum_delta=sum_d,
        sum_delta_sq=sum_d2, tau_eff=tau_eff, steps=r, T=T,
        extras={"z_M": z_M, "v_M": v_M},
    )


def audit(outcomes, stream, params, truth=None, variant="re-derived", z_path=None, z_M=None,
          oracle_tol=DEFAULT_ORACLE_TOL, slack=DEFAULT_SLACK):
    """Build the ledger for a run and audit it with one set of constants."""
    ledger = build_ledger(outcomes, stream, params, truth=truth, z_path=z_path, z_M=z_M,
                          oracle_tol=oracle_tol)
    return audit_ledger(ledger, variant=variant, slack=slack)
