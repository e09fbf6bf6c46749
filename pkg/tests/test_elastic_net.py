import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparsetrack import elastic_net as en
from sparsetrack.errors import AssumptionViolation, ConvergenceError, InvalidParameterError, ShapeError

import oracles
from freeze_oracles import enumeration_instance, reference_instance


def one_dim():
    return en.ElasticNetParams(0.1, 0.1, 0.5), en.MeasurementRound([[1.0]], [1.0])


def random_round(rng, m=6, n=9):
    return en.MeasurementRound(rng.standard_normal((m, n)), rng.standard_normal(m))


def safe_params(rnd, lam=0.1, mu=0.05, ratio=0.99):
    return en.ElasticNetParams(lam, mu, ratio / rnd.norm_sq)


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        en.ElasticNetParams(0.0, 1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        en.ElasticNetParams(1.0, float("inf"), 1.0)
    p = en.ElasticNetParams(0.1, 0.1, 0.5)
    assert p.threshold == pytest.approx(0.05 / 1.05)
    assert p.contraction == pytest.approx(1 / 1.05)


def test_round_validation():
    with pytest.raises(ShapeError):
        en.MeasurementRound(np.zeros((3, 2)), np.zeros(2))
    rnd = en.MeasurementRound(np.ones((2, 2)), [1.0, 2.0], t=4)
    assert (rnd.m, rnd.n, rnd.t) == (2, 2, 4)
    assert not rnd.A.flags.writeable


def test_cost_examples():
    p, rnd = one_dim()
    assert en.cost(p, rnd, [0.0]) == pytest.approx(0.5)
    assert en.cost(p, rnd, [1.0]) == pytest.approx(0.1 + 0.05)
    with pytest.raises(ShapeError):
        en.cost(p, rnd, [1.0, 2.0])


def test_one_dim_closed_forms(frozen):
    p, rnd = one_dim()
    step = en.ist_step(p, rnd, [0.0])
    assert step[0] == pytest.approx(frozen["closed_form"]["one_dim_first_step"], abs=1e-12)
    rep = en.batch_solve(p, rnd)
    assert rep.minimizer[0] == pytest.approx(frozen["closed_form"]["one_dim_minimizer"], abs=1e-9)
    assert rep.optimality_residual < 1e-12


def test_ist_step_matches_formula(rng):
    for _ in range(20):
        rnd = random_round(rng)
        p = safe_params(rnd, lam=rng.uniform(0.01, 1), mu=rng.uniform(0.001, 1))
        b = rng.standard_normal(rnd.n)
        np.testing.assert_allclose(
            en.ist_step(p, rnd, b),
            oracles.ist_step_formula(rnd.A, rnd.y, b, p.tau, p.lam, p.mu), atol=1e-12)


def test_ist_step_minimizes_surrogate(rng):
    rnd = random_round(rng)
    p = safe_params(rnd)
    b = rng.standard_normal(rnd.n)
    x = en.ist_step(p, rnd, b)
    best = en.surrogate(p, rnd, x, b)
    for _ in range(200):
        trial = x + 1e-3 * rng.standard_normal(rnd.n)
        assert en.surrogate(p, rnd, trial, b) >= best - 1e-12


def test_surrogate_gap_matches_direct_formula(rng):
    rnd = random_round(rng)
    p = safe_params(rnd)
    for _ in range(20):
        x, b = rng.standard_normal(rnd.n), rng.standard_normal(rnd.n)
        assert en.surrogate_gap(p, rnd, x, b) >= -1e-12
        assert en.surrogate(p, rnd, x, b) == pytest.approx(
            oracles.surrogate_direct(rnd.A, rnd.y, x, b, p.tau, p.lam, p.mu), rel=1e-12, abs=1e-12)
        assert en.surrogate_gap(p, rnd, b, b) == 0.0


def test_step_condition():
    rnd = en.MeasurementRound([[2.0, 0.0], [0.0, 1.0]], [1.0, 1.0])
    ok = en.ElasticNetParams(0.1, 0.1, 0.25)
    assert en.check_step_size(ok, rnd) == pytest.approx(1.0)
    bad = ok.with_tau(0.3)
    with pytest.raises(AssumptionViolation) as info:
        en.check_step_size(bad, rnd)
    assert info.value.ratio == pytest.approx(1.2)
    assert en.rescaled_tau(bad, rnd) == pytest.approx(0.99 / 4)
    assert en.rescaled_tau(ok.with_tau(0.1), rnd) == 0.1
    with pytest.raises(AssumptionViolation):
        en.batch_solve(bad, rnd)


def test_large_lambda_gives_zero(rng):
    rnd = random_round(rng)
    lam = 1.01 * np.max(np.abs(rnd.A.T @ rnd.y))
    rep = en.batch_solve(safe_params(rnd, lam=lam), rnd)
    np.testing.assert_array_equal(rep.minimizer, 0.0)
    assert rep.iterations <= 2


def test_matches_enumeration_oracle(frozen):
    for entry in frozen["enumeration"]:
        A, y, lam, mu = enumeration_instance(entry["seed"])
        rnd = en.MeasurementRound(A, y)
        rep = en.batch_solve(safe_params(rnd, lam, mu), rnd)
        np.testing.assert_allclose(rep.minimizer, entry["minimizer"], atol=1e-8)


def test_matches_coordinate_descent_oracle(frozen):
    for entry in frozen["reference"][:40]:
        A, y, lam, mu = reference_instance(entry["seed"])
        rnd = en.MeasurementRound(A, y)
        rep = en.batch_solve(safe_params(rnd, lam, mu), rnd)
        np.testing.assert_allclose(rep.minimizer, entry["minimizer"], atol=1e-8)


def test_polish_handles_wide_ill_posed_round(benchmark_run):
    # 15 x 20 block with mu = 1e-6: plain IST stalls in the null space of A
    _, run = benchmark_run
    rnd = run.rounds[2]
    p = en.ElasticNetParams(2e-2, 1e-6, 0.99 / rnd.norm_sq)
    rep = en.batch_solve(p, rnd)
    assert rep.polished and rep.optimality_residual < 1e-10
    with pytest.raises(ConvergenceError) as info:
        en.batch_solve(p, rnd, polish=False, max_iter=5000)
    assert info.value.estimate.iterations == 5000


def test_two_starts_same_minimizer(rng):
    rnd = random_round(rng, 5, 8)
    p = safe_params(rnd)
    a = en.batch_solve(p, rnd).minimizer
    b = en.batch_solve(p, rnd, x0=10 * rng.standard_normal(rnd.n)).minimizer
    np.testing.assert_allclose(a, b, atol=2e-10)


def test_optimality_residual_zero_only_at_minimizer(rng):
    rnd = random_round(rng)
    p = safe_params(rnd)
    z = en.batch_solve(p, rnd).minimizer
    assert en.optimality_residual(p, rnd, z) < 1e-10
    assert en.optimality_residual(p, rnd, z + 0.1) > 1e-3


@given(st.integers(0, 10_000))
def test_ist_step_is_contractive(seed):
    rng = np.random.default_rng(seed)
    rnd = random_round(rng, int(rng.integers(1, 10)), int(rng.integers(1, 12)))
    p = safe_params(rnd, lam=rng.uniform(0.01, 1), mu=rng.uniform(0.01, 2), ratio=rng.uniform(0.1, 1))
    a, b = rng.standard_normal((2, rnd.n))
    lhs = np.linalg.norm(en.ist_step(p, rnd, a) - en.ist_step(p, rnd, b))
    assert lhs <= p.contraction * np.linalg.norm(a - b) + 1e-12
