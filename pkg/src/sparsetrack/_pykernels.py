"""Pure NumPy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable, or when
``SPARSETRACK_PURE_PYTHON=1`` is set.  Signatures and semantics match the
Cython module exactly.
"""
import numpy as np

BACKEND = "python"


def soft_threshold_vec(v, beta):
    v = np.asarray(v, dtype=np.float64)
    out = np.zeros_like(v)
    hi = v > beta
    lo = v < -beta
    out[hi] = v[hi] - beta
    out[lo] = v[lo] + beta
    return out


def ist_steps(A, y, x0, tau, lam, mu, r):
    x = np.array(x0, dtype=np.float64, copy=True)
    denom = 1.0 + mu * tau
    beta = lam * tau / denom
    for _ in range(r):
        z = (x + tau * (A.T @ (y - A @ x))) / denom
        x = soft_threshold_vec(z, beta)
    return x


def ist_solve(A, y, x0, tau, lam, mu, tol, max_iter):
    """Batch IST from ``x0``; returns ``(x, iterations, last_step_inf_norm)``."""
    x = np.array(x0, dtype=np.float64, copy=True)
    denom = 1.0 + mu * tau
    beta = lam * tau / denom
    step = np.inf
    k = 0
    while k < max_iter:
        z = (x + tau * (A.T @ (y - A @ x))) / denom
        x_new = soft_threshold_vec(z, beta)
        step = float(np.max(np.abs(x_new - x))) if x.size else 0.0
        x = x_new
        k += 1
        if step <= tol:
            break
    return x, k, step


def _rayleigh_power(A, v, tol, max_iter):
    # stop on the eigen-residual ||Gv - lam v|| <= tol * lam, G = A^T A
    lam = 0.0
    for k in range(1, max_iter + 1):
        w = A.T @ (A @ v)
        lam = float(v @ w)
        nw = float(np.sqrt(w @ w))
        if nw == 0.0:
            return 0.0, k, True
        resid = float(np.linalg.norm(w - lam * v))
        v = w / nw
        if resid <= tol * abs(lam):
            return lam, k, True
    return lam, max_iter, False


def power_iteration(A, tol, max_iter):
    """Largest eigenvalue of A^T A; returns ``(eigenvalue, iterations, converged)``."""
    n = A.shape[1]
    v = np.full(n, 1.0 / np.sqrt(n))
    if not np.any(A @ v):
        # start vector in the null space: perturb by the first basis vector
        v = v.copy()
        v[0] += 1.0
        v /= np.linalg.norm(v)
    lam, it, ok = _rayleigh_power(A, v, tol, max_iter)
    col_sq = np.einsum("ij,ij->j", A, A)
    j = int(np.argmax(col_sq))
    if lam < col_sq[j] * (1.0 - 1e-12):
        # converged onto a lower eigenvalue: restart from the heaviest column
        e = np.zeros(n)
        e[j] = 1.0
        lam2, it2, ok = _rayleigh_power(A, e, tol, max_iter)
        lam = max(lam, lam2)
        it += it2
    return lam, it, ok
