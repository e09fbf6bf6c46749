"""Online IST: one (or ``r``) IST steps per revealed round.

The tracker is a small value-type state machine::

    state = init(n, r)
    for rnd in stream:
        state, outcome = step(state, params, rnd)

``outcome.action_before`` is the iterate held when the round arrives and
``outcome.action_after`` the iterate produced from it.  Both losses are kept.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .csvio import write_table
from .elastic_net import check_step_size, cost, rescaled_tau
from .errors import InvalidParameterError, ShapeError, SparseTrackError
from .numerics import as_vector


@dataclass(frozen=True, eq=False)
class TrackerState:
    x: np.ndarray
    t: int
    r: int

    @property
    def n(self):
        return self.x.shape[0]


@dataclass(frozen=True, eq=False)
class RoundOutcome:
    t: int
    action_before: np.ndarray
    action_after: np.ndarray
    loss_before: float
    loss_after: float
    tau: float
    steps: int = 1


def init(n, r=1, x0=None):
    if int(n) < 1:
        raise ShapeError(f"dimension must be at least 1, got {n}")
    if int(r) < 1:
        raise InvalidParameterError(f"steps per round must be at least 1, got {r}")
    if x0 is None:
        x = np.zeros(int(n))
    else:
        x = as_vector(x0, "x0").copy()
        if x.shape[0] != n:
            raise ShapeError(f"x0 has length {x.shape[0]}, expected {n}")
    x.setflags(write=False)
    return TrackerState(x=x, t=0, r=int(r))


def step(state, params, rnd, rescale_tau=False):
    """Play one round: ``state.r`` IST steps on ``(rnd.A, rnd.y)``.

    With ``rescale_tau`` the step is shrunk to ``0.99 / ||A_t||^2`` on rounds
    where ``params.tau`` violates the step condition; otherwise such a round
    raises :class:`AssumptionViolation`.
    """
    if rnd.n != state.n:
        raise ShapeError(f"round has {rnd.n} columns, tracker has dimension {state.n}")
    if rescale_tau:
        tau = rescaled_tau(params, rnd)
        p = params.with_tau(tau)
    else:
        check_step_size(params, rnd)
        tau, p = params.tau, params
    x_new = kernels.ist_steps(rnd.A, rnd.y, state.x, p.tau, p.lam, p.mu, state.r)
    x_new.setflags(write=False)
    outcome = RoundOutcome(
        t=state.t + 1,
        action_before=state.x,
        action_after=x_new,
        loss_before=cost(p, rnd, state.x),
        loss_after=cost(p, rnd, x_new),
        tau=tau,
        steps=state.r,
    )
    return TrackerState(x=x_new, t=state.t + 1, r=state.r), outcome


def run(stream, params, r=1, x0=None, rescale_tau=False):
    """Fold :func:`step` over ``stream``; errors carry the failing round index."""
    stream = list(stream)
    if not stream:
        return []
    state = init(stream[0].n, r, x0)
    outcomes = []
    for i, rnd in enumerate(stream, start=1):
        try:
            state, out = step(state, params, rnd, rescale_tau=rescale_tau)
        except SparseTrackError as exc:
            exc.round_index = i
            exc.args = (f"round {i}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            raise
        outcomes.append(out)
    return outcomes


def iterates(outcomes, x0=None):
    """Stack ``[x_0, x_1, ..., x_T]`` from a run's outcomes."""
    if not outcomes:
        return np.zeros((0, 0)) if x0 is None else np.atleast_2d(x0)
    first = outcomes[0].action_before if x0 is None else np.asarray(x0, dtype=np.float64)
    return np.vstack([first] + [o.action_after for o in outcomes])


def write_trajectory(path, outcomes, include_x=False):
    header = ["t", "loss_before", "loss_after", "tau"]
    if include_x and outcomes:
        header += [f"x{i}" for i in range(outcomes[0].action_after.shape[0])]
    rows = []
    for o in outcomes:
        row = [o.t, o.loss_before, o.loss_after, o.tau]
        if include_x:
            row += list(o.action_after)
        rows.append(row)
    write_table(path, header, rows)
