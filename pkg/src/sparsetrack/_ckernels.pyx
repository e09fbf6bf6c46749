# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: soft thresholding, IST sweeps, power iteration.

Mirrors ``_pykernels`` one-for-one; see that module for semantics.
"""
import numpy as np
from libc.math cimport fabs, sqrt, INFINITY

BACKEND = "cython"


cdef inline double _soft(double z, double beta) nogil:
    if z > beta:
        return z - beta
    if z < -beta:
        return z + beta
    return 0.0


def soft_threshold_vec(v, double beta):
    cdef double[::1] src = np.ascontiguousarray(v, dtype=np.float64).ravel()
    out = np.empty(src.shape[0], dtype=np.float64)
    cdef double[::1] dst = out
    cdef Py_ssize_t i
    for i in range(src.shape[0]):
        dst[i] = _soft(src[i], beta)
    return out.reshape(np.shape(v))


cdef void _sweep(const double[:, ::1] A, const double[::1] y, double[::1] x,
                 double[::1] res, double tau, double denom, double beta) noexcept nogil:
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1], i, j
    cdef double s
    for i in range(m):
        s = y[i]
        for j in range(n):
            s -= A[i, j] * x[j]
        res[i] = s
    for j in range(n):
        s = 0.0
        for i in range(m):
            s += A[i, j] * res[i]
        x[j] = _soft((x[j] + tau * s) / denom, beta)


def ist_steps(A, y, x0, double tau, double lam, double mu, Py_ssize_t r):
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    out = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] x = out
    cdef double[::1] res = np.empty(Av.shape[0], dtype=np.float64)
    cdef double denom = 1.0 + mu * tau
    cdef double beta = lam * tau / denom
    cdef Py_ssize_t k
    with nogil:
        for k in range(r):
            _sweep(Av, yv, x, res, tau, denom, beta)
    return out


def ist_solve(A, y, x0, double tau, double lam, double mu, double tol, Py_ssize_t max_iter):
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = Av.shape[1], j, k = 0
    out = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] x = out
    cdef double[::1] prev = np.empty(n, dtype=np.float64)
    cdef double[::1] res = np.empty(Av.shape[0], dtype=np.float64)
    cdef double denom = 1.0 + mu * tau
    cdef double beta = lam * tau / denom
    cdef double step = INFINITY, d
    with nogil:
        while k < max_iter:
            for j in range(n):
                prev[j] = x[j]
            _sweep(Av, yv, x, res, tau, denom, beta)
            k += 1
            step = 0.0
            for j in range(n):
                d = fabs(x[j] - prev[j])
                if d > step:
                    step = d
            if step <= tol:
                break
    return out, k, step


cdef tuple _rayleigh_power(const double[:, ::1] A, double[::1] v, double tol, Py_ssize_t max_iter):
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1], i, j, k
    cdef double[::1] u = np.empty(m, dtype=np.float64)
    cdef double[::1] w = np.empty(n, dtype=np.float64)
    cdef double lam = 0.0, s, nw, resid
    for k in range(1, max_iter + 1):
        for i in range(m):
            s = 0.0
            for j in range(n):
                s += A[i, j] * v[j]
            u[i] = s
        lam = 0.0
        nw = 0.0
        for j in range(n):
            s = 0.0
            for i in range(m):
                s += A[i, j] * u[i]
            w[j] = s
            lam += v[j] * s
            nw += s * s
        nw = sqrt(nw)
        if nw == 0.0:
            return 0.0, k, True
        resid = 0.0
        for j in range(n):
            s = w[j] - lam * v[j]
            resid += s * s
            v[j] = w[j] / nw
        if sqrt(resid) <= tol * fabs(lam):
            return lam, k, True
    return lam, max_iter, False


def power_iteration(A, double tol, Py_ssize_t max_iter):
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t n = Av.shape[1]
    A_arr = np.asarray(Av)
    v = np.full(n, 1.0 / np.sqrt(n))
    if not np.any(A_arr @ v):
        v[0] += 1.0
        v /= np.linalg.norm(v)
    lam, it, ok = _rayleigh_power(Av, v, tol, max_iter)
    col_sq = np.einsum("ij,ij->j", A_arr, A_arr)
    j = int(np.argmax(col_sq))
    if lam < col_sq[j] * (1.0 - 1e-12):
        e = np.zeros(n)
        e[j] = 1.0
        lam2, it2, ok = _rayleigh_power(Av, e, tol, max_iter)
        lam = max(lam, lam2)
        it += it2
    return lam, it, ok
