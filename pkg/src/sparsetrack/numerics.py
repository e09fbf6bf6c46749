"""Dense vector/matrix helpers, soft thresholding and the spectral norm.

Vectors and matrices are plain ``float64`` NumPy arrays; the helpers here only
validate shape and finiteness at the public boundary.
"""
import numpy as np

from . import kernels
from .errors import ConvergenceError, InvalidParameterError, ShapeError

DEFAULT_NORM_TOL = 1e-10
DEFAULT_NORM_MAX_ITER = 100_000


def as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} has non-finite entries")
    return np.ascontiguousarray(arr)


def as_matrix(A, name="matrix"):
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} has non-finite entries")
    return np.ascontiguousarray(arr)


def _check_beta(beta):
    if not beta > 0:
        raise InvalidParameterError(f"threshold must be positive, got {beta!r}")


def soft_threshold(z, beta):
    """Scalar soft thresholding: shrink ``z`` toward zero by ``beta``."""
    _check_beta(beta)
    z = float(z)
    if z > beta:
        return z - beta
    if z < -beta:
        return z + beta
    return 0.0


def soft_threshold_vec(v, beta):
    """Component-wise soft thresholding of a vector."""
    _check_beta(beta)
    return kernels.soft_threshold_vec(as_vector(v), float(beta))


def spectral_norm(A, tol=DEFAULT_NORM_TOL, max_iter=DEFAULT_NORM_MAX_ITER):
    """Largest singular value of ``A`` by power iteration on ``A.T @ A``.

    The start vector is the normalized all-ones vector.  If ``A`` annihilates
    it, the first basis vector is added before normalizing.  The result is
    cross-checked against the largest column norm (a lower bound on the
    spectral norm); falling short of it triggers a restart from that column.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` is reached; ``exc.estimate`` holds the last estimate.
    """
    A = as_matrix(A)
    if A.size == 0:
        raise ShapeError("spectral_norm needs a non-empty matrix")
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    lam, iters, converged = kernels.power_iteration(A, float(tol), int(max_iter))
    sigma = float(np.sqrt(max(lam, 0.0)))
    if not converged:
        raise ConvergenceError(
            f"power iteration did not reach tol={tol} in {iters} iterations", estimate=sigma
        )
    return sigma
