import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sparsetrack import kernels
from sparsetrack.errors import ConvergenceError, InvalidParameterError, ShapeError
from sparsetrack.numerics import as_matrix, as_vector, soft_threshold, soft_threshold_vec, spectral_norm

import oracles

finite = st.floats(-1e6, 1e6, allow_nan=False)
betas = st.floats(1e-6, 1e3)


def test_soft_threshold_examples():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-3.0, 1.0) == -2.0
    assert soft_threshold(0.5, 1.0) == 0.0
    assert soft_threshold(1.0, 1.0) == 0.0


@pytest.mark.parametrize("beta", [0.0, -1.0, float("nan")])
def test_soft_threshold_rejects_bad_beta(beta):
    with pytest.raises(InvalidParameterError):
        soft_threshold(1.0, beta)
    with pytest.raises(InvalidParameterError):
        soft_threshold_vec([1.0], beta)


@given(finite, finite, betas)
def test_soft_threshold_is_nonexpansive(a, b, beta):
    assert abs(soft_threshold(a, beta) - soft_threshold(b, beta)) <= abs(a - b) * (1 + 1e-15)


@given(finite, betas)
def test_soft_threshold_is_the_prox_of_abs(z, beta):
    x = soft_threshold(z, beta)
    # optimality of 0.5 (x - z)^2 + beta |x|
    if x == 0:
        assert abs(z) <= beta
    else:
        assert math.isclose(x - z + beta * math.copysign(1, x), 0.0, abs_tol=1e-9 * max(1, abs(z)))


@given(arrays(np.float64, st.integers(1, 30), elements=finite), betas)
def test_vector_matches_scalar(v, beta):
    out = soft_threshold_vec(v, beta)
    expected = [oracles.scalar_soft(float(z), beta) for z in v]
    np.testing.assert_array_equal(out, expected)


def test_vector_helpers_validate():
    assert as_vector(3.0).shape == (1,)
    with pytest.raises(ShapeError):
        as_vector(np.zeros((2, 2)))
    with pytest.raises(InvalidParameterError):
        as_vector([1.0, float("inf")])
    with pytest.raises(ShapeError):
        as_matrix([1.0, 2.0])


def test_spectral_norm_examples():
    assert spectral_norm(np.eye(3)) == pytest.approx(1.0, rel=1e-12)
    assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-12)
    assert spectral_norm(np.zeros((3, 2))) == 0.0
    # the all-ones start vector is annihilated here
    assert spectral_norm(np.array([[1.0, -1.0]])) == pytest.approx(math.sqrt(2), rel=1e-12)


def test_spectral_norm_empty_matrix():
    with pytest.raises(ShapeError):
        spectral_norm(np.zeros((0, 3)))


def test_spectral_norm_reports_estimate_at_cap():
    A = np.diag([1.0, 0.999999, 0.5])
    A[0, 1] = 1e-3
    with pytest.raises(ConvergenceError) as info:
        spectral_norm(A, tol=1e-15, max_iter=3)
    assert info.value.estimate > 0


@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
              elements=st.floats(-100, 100, allow_nan=False)))
def test_spectral_norm_matches_svd(A):
    expected = oracles.svd_norm(A)
    assert spectral_norm(A) == pytest.approx(expected, rel=1e-9, abs=1e-12)


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
              elements=st.floats(-10, 10, allow_nan=False)),
       st.floats(-5, 5, allow_nan=False))
def test_spectral_norm_invariants(A, c):
    s = spectral_norm(A)
    assert spectral_norm(A.T) == pytest.approx(s, rel=1e-9, abs=1e-12)
    assert spectral_norm(c * A) == pytest.approx(abs(c) * s, rel=1e-9, abs=1e-9)
    assert s >= np.max(np.linalg.norm(A, axis=0)) * (1 - 1e-9)


def test_backend_is_selected():
    assert kernels.BACKEND in kernels.available_backends()
