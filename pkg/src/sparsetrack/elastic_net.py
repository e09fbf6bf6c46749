"""Time-indexed Elastic-net cost, its surrogate functional and batch IST.

The cost for one round is::

    f(x) = 0.5 * ||y - A x||^2 + lam * ||x||_1 + 0.5 * mu * ||x||^2

and one IST step from ``b`` is the closed-form minimizer of the surrogate
``f(x) + s(x, b)``::

    S_{lam tau / (1 + mu tau)} [ (b + tau A^T (y - A b)) / (1 + mu tau) ]
"""
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import kernels
from .errors import AssumptionViolation, ConvergenceError, InvalidParameterError, ShapeError
from .numerics import as_matrix, as_vector, spectral_norm

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200_000
RESCALE_SAFETY = 0.99
STEP_EPS = 1e-12
POLISH_EVERY = 500


@dataclass(frozen=True)
class ElasticNetParams:
    """Regularization weights ``lam`` (l1), ``mu`` (Tikhonov) and step ``tau``."""

    lam: float
    mu: float
    tau: float

    def __post_init__(self):
        for name in ("lam", "mu", "tau"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")
            object.__setattr__(self, name, float(value))

    @property
    def threshold(self):
        """Shrinkage threshold lam*tau/(1+mu*tau)."""
        return self.lam * self.tau / (1.0 + self.mu * self.tau)

    @property
    def contraction(self):
        """Per-step contraction factor 1/(1+mu*tau)."""
        return 1.0 / (1.0 + self.mu * self.tau)

    def with_tau(self, tau):
        return replace(self, tau=tau)


@dataclass(frozen=True, eq=False)
class MeasurementRound:
    """One round of data: sensing matrix ``A`` (m x n), measurements ``y`` and index ``t``."""

    A: np.ndarray
    y: np.ndarray
    t: int = 0

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        y = as_vector(self.y, "y")
        if y.shape[0] != A.shape[0]:
            raise ShapeError(f"y has length {y.shape[0]} but A has {A.shape[0]} rows")
        A.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @cached_property
    def norm_sq(self):
        """Squared spectral norm of ``A``.

        Power iteration first; a nearly repeated top singular value can stall
        it, in which case the LAPACK 2-norm is used.
        """
        try:
            return spectral_norm(self.A) ** 2
        except ConvergenceError:
            return float(np.linalg.norm(self.A, 2)) ** 2

    @cached_property
    def gram(self):
        return self.A.T @ self.A

    @cached_property
    def correlation(self):
        return self.A.T @ self.y


@dataclass
class BatchSolveReport:
    minimizer: np.ndarray
    iterations: int
    final_step_norm: float
    optimality_residual: float
    polished: bool = False
    converged: bool = True


def _check_x(rnd, x, name="x"):
    x = as_vector(x, name)
    if x.shape[0] != rnd.n:
        raise ShapeError(f"{name} has length {x.shape[0]} but A has {rnd.n} columns")
    return x


def step_ratio(params, rnd):
    """tau * ||A||_2^2 for this round."""
    return params.tau * rnd.norm_sq


def check_step_size(params, rnd, eps=STEP_EPS):
    ratio = step_ratio(params, rnd)
    if ratio > 1.0 + eps:
        raise AssumptionViolation(
            f"tau*||A||^2 = {ratio:.6g} > 1 on round {rnd.t}", round_index=rnd.t, ratio=ratio
        )
    return ratio


def rescaled_tau(params, rnd, safety=RESCALE_SAFETY):
    """``params.tau`` if it satisfies the step condition, else ``safety / ||A||^2``."""
    norm_sq = rnd.norm_sq
    if norm_sq == 0.0:
        return params.tau
    return min(params.tau, safety / norm_sq)


def rescale_params(params, rnd, safety=RESCALE_SAFETY):
    return params.with_tau(rescaled_tau(params, rnd, safety))


def cost(params, rnd, x):
    x = _check_x(rnd, x)
    r = rnd.y - rnd.A @ x
    return float(0.5 * (r @ r) + params.lam * np.sum(np.abs(x)) + 0.5 * params.mu * (x @ x))


def surrogate_gap(params, rnd, x, b):
    """s(x, b) = ||x - b||^2 / (2 tau) - ||A x - A b||^2 / 2."""
    x = _check_x(rnd, x)
    b = _check_x(rnd, b, "b")
    d = x - b
    Ad = rnd.A @ d
    return float((d @ d) / (2.0 * params.tau) - 0.5 * (Ad @ Ad))


def surrogate(params, rnd, x, b):
    """The surrogate functional f(x) + s(x, b)."""
    return cost(params, rnd, x) + surrogate_gap(params, rnd, x, b)


def ist_step(params, rnd, b):
    """Minimizer of the surrogate f(., b): one IST step from ``b``."""
    b = _check_x(rnd, b, "b")
    return kernels.ist_steps(rnd.A, rnd.y, b, params.tau, params.lam, params.mu, 1)


def optimality_residual(params, rnd, x):
    """Sup-norm distance of 0 from the subdifferential of f at ``x``.

    Zero exactly at the minimizer.
    """
    x = _check_x(rnd, x)
    g = rnd.A.T @ (rnd.A @ x - rnd.y) + params.mu * x
    nz = x != 0
    out = np.empty_like(x)
    out[nz] = np.abs(g[nz] + params.lam * np.sign(x[nz]))
    out[~nz] = np.maximum(np.abs(g[~nz]) - params.lam, 0.0)
    return float(out.max()) if out.size else 0.0


def _enet_objective(params, H, c, x):
    return float(0.5 * x @ (H @ x) - c @ x + params.lam * np.sum(np.abs(x)))


def _feature_sign(params, rnd, x, max_iter=None):
    """Exact active-set refinement (feature-sign search) from ``x``.

    Alternates a closed-form solve on the current support and sign pattern
    with a discrete line search over the sign changes along the segment, then
    activates the zero coordinate that violates optimality most.  Terminates
    in finitely many steps; returns ``None`` if the cap is hit.
    """
    n = rnd.n
    H = rnd.gram + params.mu * np.eye(n)
    c = rnd.correlation
    lam = params.lam
    x = np.array(x, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(c))))
    tol = 1e-12 * scale
    max_iter = 20 * n + 100 if max_iter is None else max_iter
    theta = np.sign(x)
    for _ in range(max_iter):
        g = H @ x - c
        active = theta != 0
        nz = x != 0
        if np.all(np.abs(g[nz] + lam * theta[nz]) <= tol):
            viol = np.where(active, 0.0, np.abs(g) - lam)
            i = int(np.argmax(viol)) if n else 0
            if not n or viol[i] <= tol:
                return x
            theta[i] = -np.sign(g[i])
            active = theta != 0
        S = np.flatnonzero(active)
        try:
            xs = np.linalg.solve(H[np.ix_(S, S)], c[S] - lam * theta[S])
        except np.linalg.LinAlgError:
            return None
        target = np.zeros(n)
        target[S] = xs
        best, best_val = target, _enet_objective(params, H, c, target)
        d = target - x
        cross = (x[S] != 0) & (np.sign(xs) != np.sign(x[S]))
        for j in S[cross]:
            a = x[j] / (x[j] - target[j])
            cand = x + a * d
            cand[j] = 0.0
            val = _enet_objective(params, H, c, cand)
            if val < best_val:
                best, best_val = cand, val
        x = best
        theta = np.sign(x)
    return None


def _certified_polish(params, rnd, x, tol):
    z = _feature_sign(params, rnd, x)
    if z is None:
        return None
    z_step = float(np.max(np.abs(ist_step(params, rnd, z) - z)))
    if z_step > tol:
        return None
    return z, z_step, optimality_residual(params, rnd, z)


def batch_solve(params, rnd, x0=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, polish=True):
    """Batch IST iterated from ``x0`` (zero by default) to a fixed point.

    Stops when the sup-norm of the IST step is at most ``tol``.  With
    ``polish`` enabled, every ``POLISH_EVERY`` iterations an exact active-set
    refinement is started from the current iterate; the candidate is accepted
    only if one further IST step moves it by at most ``tol``, i.e. it passes
    the same stopping test as plain iteration.  This matters when ``A`` has
    more columns than rows and ``mu`` is tiny: plain IST then crawls at rate
    ``1 - mu tau`` along the null space of ``A``.

    Raises
    ------
    ConvergenceError
        When ``max_iter`` is exhausted; ``exc.estimate`` is the report of the
        best iterate.
    """
    check_step_size(params, rnd)
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    x = np.zeros(rnd.n) if x0 is None else _check_x(rnd, x0, "x0").copy()
    total = 0
    step = np.inf
    polished = False
    while total < max_iter:
        chunk = min(POLISH_EVERY, max_iter - total)
        x, k, step = kernels.ist_solve(rnd.A, rnd.y, x, params.tau, params.lam, params.mu, tol, chunk)
        total += k
        done = step <= tol
        if polish:
            candidate = _certified_polish(params, rnd, x, tol)
            if candidate is not None:
                z, z_step, z_res = candidate
                if not done or z_res < optimality_residual(params, rnd, x):
                    x, step, polished, done = z, z_step, True, True
                    total += 1
        if done:
            break
    report = BatchSolveReport(
        minimizer=x,
        iterations=total,
        final_step_norm=float(step),
        optimality_residual=optimality_residual(params, rnd, x),
        polished=polished,
    )
    if step > tol:
        report.converged = False
        raise ConvergenceError(
            f"batch IST did not reach tol={tol} within {max_iter} iterations (step {step:.3g})",
            estimate=report,
        )
    return report
