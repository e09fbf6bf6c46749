"""Synthetic measurement streams for testing and auditing."""
import numpy as np

from .elastic_net import MeasurementRound
from .errors import InvalidParameterError
from .numerics import as_matrix, as_vector


def static_stream(A, y, T):
    """The same round repeated ``T`` times (indices 1..T)."""
    A = as_matrix(A, "A")
    y = as_vector(y, "y")
    return [MeasurementRound(A, y, t=t) for t in range(1, T + 1)]


def random_stream(rng, n, m, T, sparsity=3, drift=0.05, switch_prob=0.1, noise_std=0.0):
    """A drifting sensing matrix observing a sparse, occasionally switching parameter.

    ``A_t`` is a Gaussian random walk scaled by ``1/sqrt(m)`` with step size
    ``drift``.  The truth ``v_t`` keeps ``sparsity`` nonzero entries; with
    probability ``switch_prob`` per round one of them moves to a new index and
    value.  ``y_t = A_t v_t`` plus optional iid Gaussian noise.

    Returns ``(stream, truth)`` with ``truth`` of shape ``(T, n)``.
    """
    if not (1 <= sparsity <= n) or m < 1 or T < 1:
        raise InvalidParameterError("need 1 <= sparsity <= n, m >= 1, T >= 1")
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    v = np.zeros(n)
    v[rng.choice(n, sparsity, replace=False)] = rng.uniform(0.5, 1.5, sparsity) * rng.choice([-1, 1], sparsity)
    stream, truth = [], []
    for t in range(1, T + 1):
        if t > 1:
            A = A + drift * rng.standard_normal((m, n)) / np.sqrt(m)
            if rng.random() < switch_prob:
                on = np.flatnonzero(v)
                off = np.flatnonzero(v == 0)
                if off.size:
                    v[rng.choice(on)] = 0.0
                    v[rng.choice(off)] = rng.uniform(0.5, 1.5) * rng.choice([-1, 1])
        y = A @ v
        if noise_std > 0:
            y = y + noise_std * rng.standard_normal(m)
        stream.append(MeasurementRound(A.copy(), y, t=t))
        truth.append(v.copy())
    return stream, np.array(truth)


def uniform_tau(stream, safety=0.99):
    """Largest step ``safety / max_t ||A_t||^2`` valid on every round."""
    worst = max(rnd.norm_sq for rnd in stream)
    return safety / worst if worst > 0 else 1.0
