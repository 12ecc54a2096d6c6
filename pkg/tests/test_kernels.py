import math

import mpmath
import numpy as np
import pytest
from errors import CertificateError, ConfigurationError, DomainError
from kernels import (ContourSpec, ConvolutionHistory, DenominatorCertificate, Psi, Scheme, beta_correction,
                     betahat, betahat_regular, bhat, bhat_imaginary_axis, bhat_regular, build_kernels,
                     certify_denominator, certify_positivity, default_contour, default_theta, epsilon_factor,
                     psi, symbol)
from special_fn import cpow

ALPHAS = [1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9]


def test_build_kernels_first_entries(kernels):
    kt = kernels(1.5, 10)
    assert kt.b[0] == 0
    assert kt.b[1] == pytest.approx(1.1283791671, rel=1e-10)
    assert kt.beta[1] - kt.b[1] == pytest.approx(math.sqrt(2) * (2 * math.pi) ** -1.5 * 2.6123753487, rel=1e-9)
    assert len(kt.b) == 12


@pytest.mark.parametrize('alpha', [1.2, 1.5, 1.9])
def test_beta_correction_matches_defining_series(alpha):
    with mpmath.workdps(30):
        series = 2 * mpmath.sin(alpha * mpmath.pi / 2) * mpmath.nsum(
            lambda k: (2 * k * mpmath.pi) ** (alpha - 3), [1, mpmath.inf])
    assert beta_correction(alpha) == pytest.approx(float(series), rel=1e-12)


@pytest.mark.parametrize('alpha', ALPHAS)
def test_kernel_monotonicity(alpha, kernels):
    kt = kernels(alpha, 10_000)
    assert np.all(np.diff(kt.b) > 0)
    assert np.all(kt.db > 0)
    assert np.all(np.diff(kt.db) < 0)
    assert kt.beta[1] > kt.b[1]
    assert np.array_equal(np.delete(kt.beta, 1), np.delete(kt.b, 1))


def test_second_differences_consistent(kernels):
    kt = kernels(1.3, 500)
    for scheme in Scheme:
        d = kt.differences(scheme)
        w = kt.second_differences(scheme)
        assert w[0] == 0
        assert np.allclose(w[1:], np.diff(d)[:500], rtol=0, atol=1e-14)


def test_kernel_table_is_read_only(kernels):
    kt = kernels(1.5, 10)
    with pytest.raises(ValueError):
        kt.b[2] = 0.0


def test_kernel_table_require(kernels):
    kt = kernels(1.5, 10)
    with pytest.raises(ConfigurationError):
        kt.require(1.4, 5)
    with pytest.raises(ConfigurationError):
        kt.require(1.5, 11)
    kt.require(1.5, 10)


def test_build_kernels_rejects_bad_alpha():
    with pytest.raises(DomainError):
        build_kernels(2.0, 10)
    with pytest.raises(DomainError):
        build_kernels(1.5, 0)


@pytest.mark.parametrize('block', [1, 7, 64])
def test_convolution_history_matches_direct_sum(block):
    rng = np.random.default_rng(3)
    capacity = 150
    weights = rng.normal(size=capacity + 1)
    history = ConvolutionHistory(weights, capacity, shape=(3,), block=block)
    deltas = []
    for k in range(capacity):
        direct = sum(weights[k - j] * deltas[j] for j in range(k)) if k else np.zeros(3)
        assert np.allclose(history.combination(), direct, rtol=1e-12, atol=1e-12)
        deltas.append(rng.normal(size=3))
        history.push(deltas[-1])
    assert len(history) == capacity
    with pytest.raises(ConfigurationError):
        history.push(np.zeros(3))


def test_convolution_history_needs_enough_weights():
    with pytest.raises(ConfigurationError):
        ConvolutionHistory(np.ones(5), 10)


def test_bhat_series_against_definition(kernels):
    kt = kernels(1.5, 25)
    z = 5.0 + 0.7j
    truncated = np.sum(kt.b[1:21] * np.exp(-z * np.arange(1, 21)))
    assert abs(bhat(1.5, z) - truncated) <= 1e-10


def test_bhat_against_polylog():
    alpha, z = 1.3, 0.5 + 0.5j
    with mpmath.workdps(30):
        exact = mpmath.polylog(alpha - 2, mpmath.exp(-z)) / mpmath.gamma(3 - alpha)
    assert bhat(alpha, z) == pytest.approx(complex(exact), rel=1e-10)


@pytest.mark.parametrize('z', [1.5 + 0.7j, 0.3 + 1.0j, 0.8 - 2.5j])
def test_bhat_branches_agree(z):
    for alpha in (1.2, 1.7):
        series = bhat(alpha, z, method='series')
        bilateral = bhat(alpha, z, method='bilateral')
        assert abs(series - bilateral) <= 1e-10 * max(1.0, abs(series))


def test_bhat_conjugate_symmetry():
    z = np.array([0.2 + 0.4j, -0.5 + 2.0j, 3.0 - 1.0j, -1.0 + 3.1j])
    assert np.allclose(bhat(1.4, np.conj(z)), np.conj(bhat(1.4, z)), rtol=1e-13, atol=0)
    assert np.allclose(psi(1.4, np.conj(z)), np.conj(psi(1.4, z)), rtol=1e-13, atol=0)


def test_bhat_branch_cut_and_method():
    with pytest.raises(DomainError):
        bhat(1.5, -1.0 + 0j)
    with pytest.raises(DomainError):
        bhat(1.5, -0.5 + 1j, method='series')
    with pytest.raises(DomainError):
        bhat(1.5, 1.0 + 1j, method='fourier')


def test_bhat_regular_is_bounded_near_origin():
    direction = np.exp(2.0j)
    for r in (1e-2, 1e-5, 1e-9):
        assert abs(bhat_regular(1.5, r * direction) + beta_correction(1.5)) < 1.0
    with pytest.raises(DomainError):
        bhat_regular(1.5, 1.0 + 7.0j)


def test_betahat_difference_is_correction():
    rng = np.random.default_rng(11)
    z = rng.uniform(-1, 2, 20) + 1j * rng.uniform(0.1, 3, 20)
    corr = beta_correction(1.6)
    assert np.allclose(betahat(1.6, z) - bhat(1.6, z), corr * np.exp(-z), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize('alpha', ALPHAS)
def test_betahat_regular_vanishes_at_origin(alpha):
    for angle in (0.0, 2.0, -2.0):
        assert abs(betahat_regular(alpha, 1e-10 * np.exp(1j * angle))) <= 1e-8


def test_betahat_minus_singular_part_shrinks():
    alpha = 1.4
    direction = np.exp(1.9j)
    gaps = [abs(betahat(alpha, r * direction) - cpow(r * direction, alpha - 3)) for r in (1e-1, 1e-2, 1e-3)]
    assert gaps[1] < 0.2 * gaps[0]
    assert gaps[2] < 0.2 * gaps[1]


def test_betahat_series_cross_check(kernels):
    kt = kernels(1.4, 40)
    z = 3.0 + 0.4j
    truncated = np.sum(kt.beta[1:40] * np.exp(-z * np.arange(1, 40)))
    assert abs(betahat(1.4, z) - truncated) <= 1e-10


def test_psi_near_origin():
    alpha = 1.3
    z = 1e-4 * np.exp(2.0j)
    assert abs(psi(alpha, z) / cpow(z, alpha) - 1) <= 1e-3


def test_Psi_minus_psi():
    rng = np.random.default_rng(5)
    z = rng.uniform(-1, 1, 10) + 1j * rng.uniform(0.2, 3, 10)
    corr = beta_correction(1.5)
    expected = corr * np.exp(-2 * z) * np.expm1(z) ** 3
    assert np.allclose(Psi(1.5, z) - psi(1.5, z), expected, rtol=1e-10, atol=1e-12)
    assert np.allclose(symbol(1.5, z, 'ML1'), Psi(1.5, z))


def test_bhat_on_imaginary_axis():
    y = np.array([0.5, 1.5, 3.0, 5.0])
    assert np.allclose(bhat_imaginary_axis(1.5, y), bhat(1.5, 1j * y), rtol=1e-10, atol=0)
    with pytest.raises(DomainError):
        bhat_imaginary_axis(1.5, np.array([0.0]))


def test_epsilon_factor_regimes():
    assert epsilon_factor(1.2, 0.01, 99) == pytest.approx(1.0)
    assert epsilon_factor(1.2, 0.01, 9) == pytest.approx(0.1 ** -0.6)
    assert epsilon_factor(1.5, 2 ** -8, 10) == pytest.approx(1 + 8 * math.log(2))
    assert epsilon_factor(1.8, 0.01, 3) == 1.0


def test_contour_spec_limits():
    with pytest.raises(DomainError):
        ContourSpec(1.5)
    with pytest.raises(DomainError):
        ContourSpec(math.pi / 2 + 0.3).validate_for(1.5)
    spec = ContourSpec(default_theta(1.5))
    spec.validate_for(1.5)
    assert spec.clipped_radius * math.sin(spec.theta) == pytest.approx(math.pi)


def test_certify_denominator_default_contour():
    spec = default_contour(1.5, 0.1)
    cert = certify_denominator(1.5, 0.1, spec)
    assert cert.certified
    assert cert.samples == 10_000
    assert cert.require() is cert


def test_certify_denominator_huge_ratio_reports():
    spec = ContourSpec(default_theta(1.8))
    cert = certify_denominator(1.8, 1e6, spec)
    assert math.isfinite(cert.margin)


def test_certify_denominator_rejects_nonpositive_mu():
    with pytest.raises(DomainError):
        certify_denominator(1.5, 0.0, ContourSpec(default_theta(1.5)))


def test_failed_certificate_raises():
    cert = DenominatorCertificate(1.5, 0.1, 2.0, -1e-3, 1j, 10)
    assert not cert.certified
    with pytest.raises(CertificateError) as info:
        cert.require()
    assert info.value.certificate is cert


@pytest.mark.parametrize('alpha', ALPHAS)
def test_positivity_certificate(alpha):
    cert = certify_positivity(alpha)
    assert cert.certified
    assert cert.max_cosine_series < 0


@pytest.mark.parametrize('alpha', ALPHAS)
@pytest.mark.parametrize('mu', [0.01, 0.1, 1.0])
def test_default_contour_certified(alpha, mu):
    for scheme in Scheme:
        spec = default_contour(alpha, mu, scheme=scheme)
        assert certify_denominator(alpha, mu, spec, scheme=scheme).margin > 0
