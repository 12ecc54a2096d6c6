import math

import numpy as np
import pytest
from scipy import integrate

from errors import ConfigurationError, DomainError
from kernels import Scheme
from ode_stepper import (Constant, Power, ScalarProblem, Scaled, Sum, Tabulated, Zero, recurrence_residual, solve,
                         solve_l1, solve_ml1, source_interval_integral)


def _forcing():
    return Sum(Constant(1.0), Power(1.0, 0.2))


def _error_at_one(problem, scheme, alpha, tau, reference):
    return abs(solve(problem, scheme, alpha, tau, round(1 / tau)).final - reference)


def test_source_interval_integral_examples():
    assert source_interval_integral(Constant(1.0), 0.0, 0.5) == pytest.approx(0.5)
    assert source_interval_integral(Power(1.0, 0.2), 0.0, 1.0) == pytest.approx(1 / 1.2, rel=1e-14)
    a, b = 0.3, 0.35
    gauss, _ = integrate.fixed_quad(lambda t: 1 + t ** 0.2, a, b, n=50)
    assert source_interval_integral(_forcing(), a, b) == pytest.approx(gauss, abs=1e-12)


def test_source_interval_integral_rejects_bad_interval():
    with pytest.raises(DomainError):
        source_interval_integral(Constant(1.0), 0.5, 0.5)
    with pytest.raises(DomainError):
        source_interval_integral(Constant(1.0), -0.1, 0.5)


def test_power_rejects_nonintegrable_exponent():
    with pytest.raises(DomainError):
        Power(1.0, -1.0)


def test_interval_integrals_match_pointwise_integrals():
    tau, n = 0.1, 20
    t = np.arange(n + 1) * tau
    for source in (Power(2.0, 0.2), _forcing(), Tabulated(lambda s: s ** 3 - s)):
        direct = [source.integral(a, b) for a, b in zip(t[:-1], t[1:])]
        assert np.allclose(source.interval_integrals(tau, n), direct, rtol=1e-12, atol=1e-14)
    assert np.array_equal(Zero().interval_integrals(tau, n), np.zeros(n))


def test_tabulated_is_exact_for_polynomials():
    source = Tabulated(lambda s: 3 * s ** 2)
    assert source.integral(0.0, 2.0) == pytest.approx(8.0, rel=1e-14)
    assert source.power_terms() is None


def test_scaling_the_catalog():
    assert _forcing().scaled(2.0).power_terms() == [(2.0, 0.0), (2.0, 0.2)]
    assert Zero().scaled(3.0) == Zero()
    wrapped = Scaled(Tabulated(np.cos), 0.5)
    assert wrapped.integral(0.0, 1.0) == pytest.approx(0.5 * math.sin(1.0), rel=1e-12)
    assert wrapped.power_terms() is None


def test_scalar_problem_rejects_negative_lambda():
    with pytest.raises(DomainError):
        ScalarProblem(1.0, 0.0, -1.0)


@pytest.mark.parametrize('scheme', list(Scheme))
def test_zero_data_gives_zero_trajectory(scheme):
    history = solve(ScalarProblem(0.0, 0.0, 1.0), scheme, 1.5, 0.01, 100)
    assert np.array_equal(history.values, np.zeros(101))


@pytest.mark.parametrize('scheme', list(Scheme))
def test_constant_history_without_reaction(scheme):
    history = solve(ScalarProblem(0.7, 0.0, 0.0), scheme, 1.3, 0.05, 200)
    assert np.allclose(history.values, 0.7, rtol=0, atol=1e-14)


def test_history_metadata():
    history = solve_ml1(ScalarProblem(1.0, 0.0, 2.0), 1.4, 2 ** -8, 256)
    assert history.scheme is Scheme.ML1
    assert history.mu == 2.0 * (2 ** -8) ** 1.4 / 2
    assert history.n == 256
    assert len(history.sample(2 ** -4)) == 17
    assert history.sample(2 ** -4)[-1] == history.final
    assert history.value_at(0.5) == history.values[128]
    with pytest.raises(ConfigurationError):
        history.value_at(0.3)
    assert solve_l1(ScalarProblem(1.0, 0.0, 2.0), 1.4, 2 ** -8, 4).scheme is Scheme.L1


def test_kernel_table_must_fit(kernels):
    problem = ScalarProblem(1.0, 0.0, 1.0)
    with pytest.raises(ConfigurationError):
        solve(problem, 'L1', 1.5, 0.01, 100, kt=kernels(1.4, 100))
    with pytest.raises(ConfigurationError):
        solve(problem, 'L1', 1.5, 0.01, 100, kt=kernels(1.5, 50))
    with pytest.raises(DomainError):
        solve(problem, 'L1', 1.5, 0.0, 100)
    with pytest.raises(ConfigurationError):
        solve(problem, 'L3', 1.5, 0.01, 100)


@pytest.mark.parametrize('scheme', list(Scheme))
@pytest.mark.parametrize('problem', [ScalarProblem(0.0, 1.0, 1.0), ScalarProblem(0.0, 0.0, 1.0, _forcing()),
                                     ScalarProblem(1.0, -0.5, 30.0, _forcing())])
def test_recurrence_residual(scheme, problem, kernels):
    kt = kernels(1.4, 1024)
    history = solve(problem, scheme, 1.4, 2 ** -10, 1024, kt)
    residual = recurrence_residual(history, problem, kt)
    assert np.abs(residual).max() <= 1e-12 * (1 + np.abs(history.values).max())


def test_l1_error_problem_a():
    problem = ScalarProblem(1.0, 0.0, 1.0)
    reference = solve_ml1(problem, 1.2, 2 ** -14, 2 ** 14).final
    error = _error_at_one(problem, Scheme.L1, 1.2, 2 ** -10, reference)
    assert error == pytest.approx(2.05e-7, rel=0.15)


def test_ml1_error_and_order_problem_a():
    problem = ScalarProblem(1.0, 0.0, 1.0)
    reference = solve_ml1(problem, 1.2, 2 ** -14, 2 ** 14).final
    coarse = _error_at_one(problem, Scheme.ML1, 1.2, 2 ** -10, reference)
    fine = _error_at_one(problem, Scheme.ML1, 1.2, 2 ** -11, reference)
    assert coarse == pytest.approx(6.15e-8, rel=0.15)
    assert math.log2(coarse / fine) == pytest.approx(2.0, abs=0.1)


def test_ml1_error_and_order_problem_c():
    problem = ScalarProblem(0.0, 0.0, 1.0, _forcing())
    reference = solve_ml1(problem, 1.9, 2 ** -14, 2 ** 14).final
    coarse = _error_at_one(problem, Scheme.ML1, 1.9, 2 ** -8, reference)
    fine = _error_at_one(problem, Scheme.ML1, 1.9, 2 ** -9, reference)
    assert coarse == pytest.approx(2.32e-6, rel=0.15)
    assert math.log2(coarse / fine) == pytest.approx(2.02, abs=0.1)


@pytest.mark.parametrize('alpha', [1.2, 1.5, 1.8])
def test_l1_order_problem_a(alpha):
    problem = ScalarProblem(1.0, 0.0, 1.0)
    reference = solve_ml1(problem, alpha, 2 ** -14, 2 ** 14).final
    errors = [_error_at_one(problem, Scheme.L1, alpha, 2.0 ** -e, reference) for e in (8, 9, 10)]
    for a, b in zip(errors, errors[1:]):
        assert math.log2(a / b) == pytest.approx(3 - alpha, abs=0.15)


@pytest.mark.parametrize('scheme', list(Scheme))
@pytest.mark.parametrize('alpha', [1.2, 1.8])
@pytest.mark.parametrize('lam', [1.0, 10.0, 1e3])
@pytest.mark.parametrize('tau, n', [(2 ** -6, 10_000), (2 ** -10, 2048)])
def test_stability_bound(scheme, alpha, lam, tau, n, kernels):
    y0, y1 = 1.0, -1.0
    history = solve(ScalarProblem(y0, y1, lam), scheme, alpha, tau, n, kernels(alpha, 10_000))
    t = history.times()[1:]
    bound = 5 * (abs(y0) + lam ** -0.5 * t ** (1 - alpha / 2) * abs(y1))
    assert np.all(np.abs(history.values[1:]) <= bound)
