"""L1 and modified L1 kernels, their discrete Laplace transforms and certificates.

The sequences are b_j = j^(2-a)/Gamma(3-a) and beta, which differs from b only
at j = 1. Everything downstream works with first differences d_j = c_{j+1} - c_j
and second differences w_m = d_m - d_{m-1} of either sequence.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from errors import CertificateError, ConfigurationError, DomainError
from special_fn import cpow, gamma, power_first_difference, power_second_difference, zeta

logger = logging.getLogger(__name__)

SERIES_MIN_REAL = 1.0
TAIL_TERMS = 8
DEFAULT_THETA_OFFSET = 0.3
CERTIFY_SAMPLES = 10_000
HISTORY_BLOCK = 64


class Scheme(str, Enum):
    L1 = 'L1'
    ML1 = 'ML1'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigurationError(f"unknown scheme {value!r}; expected L1 or ML1") from None


def check_alpha(alpha):
    if not 1 < alpha < 2:
        raise DomainError(f"alpha must lie in (1, 2), got {alpha}")


def beta_correction(alpha):
    """beta_1 - b_1 = 2 sin(a pi/2) sum_k (2 k pi)^(a-3), summed through zeta."""
    check_alpha(alpha)
    return 2 * math.sin(alpha * math.pi / 2) * (2 * math.pi) ** (alpha - 3) * zeta(3 - alpha)


@dataclass(frozen=True)
class KernelTable:
    alpha: float
    n: int
    b: np.ndarray
    beta: np.ndarray
    db: np.ndarray
    dbeta: np.ndarray
    ddb: np.ndarray
    ddbeta: np.ndarray

    def sequence(self, scheme):
        return self.b if Scheme.parse(scheme) is Scheme.L1 else self.beta

    def differences(self, scheme):
        return self.db if Scheme.parse(scheme) is Scheme.L1 else self.dbeta

    def second_differences(self, scheme):
        """w_m = d_m - d_{m-1} for m >= 1; entry 0 is unused and zero."""
        return self.ddb if Scheme.parse(scheme) is Scheme.L1 else self.ddbeta

    def require(self, alpha, n):
        if not math.isclose(self.alpha, alpha, rel_tol=0, abs_tol=1e-14):
            raise ConfigurationError(f"kernel table built for alpha={self.alpha}, solver asked for {alpha}")
        if self.n < n:
            raise ConfigurationError(f"kernel table covers {self.n} levels, solver needs {n}")


def _frozen(values):
    values.setflags(write=False)
    return values


def build_kernels(alpha, n):
    check_alpha(alpha)
    if int(n) != n or n < 1:
        raise DomainError(f"kernel level count must be a positive integer, got {n}")
    n = int(n)
    q = 2 - alpha
    scale = gamma(3 - alpha)
    b = np.arange(n + 2, dtype=float) ** q / scale
    db = power_first_difference(q, np.arange(n + 1)) / scale
    ddb = np.zeros(n + 1)
    ddb[1:] = power_second_difference(q, np.arange(1, n + 1)) / scale

    corr = beta_correction(alpha)
    beta = b.copy()
    beta[1] += corr
    dbeta = db.copy()
    dbeta[0] += corr
    dbeta[1] -= corr
    ddbeta = ddb.copy()
    ddbeta[1] -= 2 * corr
    if n >= 2:
        ddbeta[2] += corr
    logger.debug(f"Built kernels for alpha={alpha} with {n} levels")
    return KernelTable(alpha, n, *(_frozen(a) for a in (b, beta, db, dbeta, ddb, ddbeta)))


class ConvolutionHistory:
    """Running sums H_k = sum_{j<k} w_{k-j} delta_j over a growing history.

    The far part of a block of HISTORY_BLOCK future sums is one Toeplitz
    product against everything stored before the block; only the near part is
    summed per step.
    """

    def __init__(self, weights, capacity, shape=(), block=HISTORY_BLOCK):
        weights = np.asarray(weights, dtype=float)
        if weights.shape[0] < capacity + 1:
            raise ConfigurationError(f"history needs {capacity + 1} weights, got {weights.shape[0]}")
        self.capacity = capacity
        self.shape = tuple(shape)
        self.block = block
        self._rev = np.ascontiguousarray(weights[:capacity + 1][::-1])
        self._deltas = np.zeros((capacity,) + self.shape)
        self._count = 0
        self._far = None
        self._far_start = -1

    def __len__(self):
        return self._count

    def push(self, delta):
        if self._count >= self.capacity:
            raise ConfigurationError("history is full")
        self._deltas[self._count] = delta
        self._count += 1

    def _refresh(self, start):
        cap = self.capacity
        rows = min(self.block, cap - start + 1)
        if start == 0:
            self._far = np.zeros((rows,) + self.shape)
        else:
            windows = sliding_window_view(self._rev, start)
            toeplitz = np.ascontiguousarray(windows[cap - start - rows + 1:cap - start + 1][::-1])
            self._far = toeplitz @ self._deltas[:start]
        self._far_start = start

    def combination(self):
        k = self._count
        start = (k // self.block) * self.block
        if start != self._far_start:
            self._refresh(start)
        near = self._rev[self.capacity - k + start:self.capacity] @ self._deltas[start:k]
        return self._far[k - start] + near


def _wrap(z):
    return z - 2j * np.pi * np.round(z.imag / (2 * np.pi))


def _expm1_ratio(z):
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def _series(alpha, z):
    terms = int(min(1e5, math.ceil(45.0 / z.real.min()) + 1))
    k = np.arange(1, terms + 1, dtype=float)
    weights = k ** (2 - alpha) / gamma(3 - alpha)
    return (weights * np.exp(-np.outer(z, k))).sum(axis=1)


def _regular(alpha, z):
    """Bilateral sum over k != 0 of (z + 2 k pi i)^(a-3) with a Hurwitz-zeta tail."""
    p = alpha - 3
    K = max(64, int(math.ceil(8 * np.abs(z).max(initial=0.0))))
    k = np.concatenate([np.arange(-K, 0), np.arange(1, K + 1)])
    finite = cpow(z[:, None] + 2j * np.pi * k[None, :], p).sum(axis=1)
    m = np.arange(TAIL_TERMS + 1)
    coef = (special.binom(p, m) * (2 * np.pi) ** (p - m)
            * 2 * np.cos((p - m) * np.pi / 2) * special.zeta(m - p, K + 1))
    return finite + np.polynomial.polynomial.polyval(z, coef)


def bhat_scaled(alpha, z, power=0, modified=False, method='auto'):
    """(e^z - 1)^power times bhat(z), or times betahat(z) when modified.

    Near the origin the factor is folded into the singular term, so the
    product stays finite wherever it has a finite limit.
    """
    check_alpha(alpha)
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty(z.shape, dtype=complex)
    if method == 'auto':
        series = z.real >= SERIES_MIN_REAL
    elif method == 'series':
        if np.any(z.real <= 0):
            raise DomainError("the series form of bhat needs Re z > 0")
        series = np.ones(z.shape, dtype=bool)
    elif method == 'bilateral':
        series = np.zeros(z.shape, dtype=bool)
    else:
        raise DomainError(f"unknown bhat method {method!r}")

    if series.any():
        zs = z[series]
        out[series] = np.expm1(zs) ** power * _series(alpha, zs)
    rest = ~series
    if rest.any():
        zw = _wrap(z[rest])
        if np.any((zw.imag == 0) & (zw.real < 0)):
            raise DomainError("z lies on the branch cut of bhat")
        singular = cpow(zw, alpha - 3 + power)
        out[rest] = _expm1_ratio(zw) ** power * (singular + zw ** power * _regular(alpha, zw))
    if modified:
        out += beta_correction(alpha) * np.exp(-z) * np.expm1(z) ** power
    return complex(out[0]) if scalar else out


def bhat(alpha, z, method='auto'):
    return bhat_scaled(alpha, z, 0, method=method)


def betahat(alpha, z, method='auto'):
    return bhat_scaled(alpha, z, 0, modified=True, method=method)


def bhat_regular(alpha, z):
    """bhat(z) - z^(a-3) on the strip |Im z| < 2 pi."""
    check_alpha(alpha)
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z.imag) >= 2 * np.pi):
        raise DomainError("bhat_regular needs |Im z| < 2 pi")
    out = _regular(alpha, np.atleast_1d(z))
    return complex(out[0]) if z.ndim == 0 else out


def betahat_regular(alpha, z):
    return bhat_regular(alpha, z) + beta_correction(alpha) * np.exp(-np.asarray(z, dtype=complex))


def psi(alpha, z):
    z = np.asarray(z, dtype=complex)
    return np.exp(-z) * bhat_scaled(alpha, z, 3)


def Psi(alpha, z):
    z = np.asarray(z, dtype=complex)
    return np.exp(-z) * bhat_scaled(alpha, z, 3, modified=True)


def symbol(alpha, z, scheme):
    return psi(alpha, z) if Scheme.parse(scheme) is Scheme.L1 else Psi(alpha, z)


def bhat_imaginary_axis(alpha, y):
    """bhat(iy) for 0 < y < 2 pi through two Hurwitz zeta values."""
    check_alpha(alpha)
    y = np.asarray(y, dtype=float)
    if np.any((y <= 0) | (y >= 2 * np.pi)):
        raise DomainError("bhat_imaginary_axis needs 0 < y < 2 pi")
    p = alpha - 3
    scale = (2 * np.pi) ** p
    upper = np.exp(0.5j * p * np.pi) * special.zeta(-p, y / (2 * np.pi))
    lower = np.exp(-0.5j * p * np.pi) * special.zeta(-p, 1 - y / (2 * np.pi))
    return scale * (upper + lower)


def epsilon_factor(alpha, tau, k):
    """Time weight of the forced-problem L1 error at t_{k+1}."""
    check_alpha(alpha)
    t = (k + 1) * tau
    if alpha < 1.5:
        return t ** (2 * alpha - 3)
    if alpha == 1.5:
        return 1 + abs(math.log(tau))
    return 1.0


@dataclass(frozen=True)
class ContourSpec:
    theta: float
    radius: float = None
    panels: int = 4
    order: int = 16
    grading: float = 0.15
    tolerance: float = 1e-12
    max_refinements: int = 6

    def __post_init__(self):
        if not math.pi / 2 < self.theta < math.pi:
            raise DomainError(f"contour angle must lie in (pi/2, pi), got {self.theta}")
        if self.radius is not None and self.radius <= 0:
            raise DomainError("contour radius must be positive")
        if self.panels < 1 or self.order < 2:
            raise DomainError("contour needs at least one panel of order two")
        if not 0 < self.grading < 1:
            raise DomainError("grading ratio must lie in (0, 1)")
        if self.tolerance <= 0:
            raise DomainError("tolerance must be positive")

    @staticmethod
    def upper_angle(alpha):
        return (alpha + 2) * math.pi / (4 * alpha)

    def validate_for(self, alpha):
        check_alpha(alpha)
        if self.theta >= self.upper_angle(alpha):
            raise DomainError(f"contour angle {self.theta:.4f} must stay below {self.upper_angle(alpha):.4f} for alpha={alpha}")

    @property
    def clipped_radius(self):
        """Length of the ray before it reaches |Im z| = pi."""
        return math.pi / math.sin(self.theta)


def default_theta(alpha):
    check_alpha(alpha)
    return math.pi / 2 + min(DEFAULT_THETA_OFFSET, 0.5 * (ContourSpec.upper_angle(alpha) - math.pi / 2))


@dataclass(frozen=True)
class DenominatorCertificate:
    alpha: float
    mu: float
    theta: float
    margin: float
    worst_point: complex
    samples: int

    @property
    def certified(self):
        return bool(self.margin > 0)

    def require(self):
        if not self.certified:
            raise CertificateError(
                f"denominator margin {self.margin:.3e} at z={self.worst_point:.4g} for alpha={self.alpha}, mu={self.mu}",
                certificate=self)
        return self


def certify_denominator(alpha, mu, spec, samples=CERTIFY_SAMPLES, scheme=Scheme.L1):
    """Minimum of |psi(z) + mu(1 + e^z)| / (mu + |z|^a) over the clipped upper ray."""
    spec.validate_for(alpha)
    if mu <= 0:
        raise DomainError(f"mu must be positive, got {mu}")
    r_max = spec.clipped_radius
    half = samples // 2
    r = np.concatenate([np.geomspace(1e-8, r_max, half), np.linspace(0, r_max, samples - half + 1)[1:]])
    z = r * np.exp(1j * spec.theta)
    value = np.abs(symbol(alpha, z, scheme) + mu * (1 + np.exp(z))) / (mu + np.abs(z) ** alpha)
    worst = int(np.argmin(value))
    cert = DenominatorCertificate(alpha, mu, spec.theta, float(value[worst]), complex(z[worst]), samples)
    logger.debug(f"Denominator margin {cert.margin:.3e} for alpha={alpha}, mu={mu}, theta={spec.theta:.4f}")
    return cert


def default_contour(alpha, mu, levels=8, scheme=Scheme.L1, **options):
    """Default contour, with the angle pulled toward pi/2 until certified."""
    offset = default_theta(alpha) - math.pi / 2
    cert = None
    for _ in range(levels):
        spec = ContourSpec(math.pi / 2 + offset, **options)
        cert = certify_denominator(alpha, mu, spec, scheme=scheme)
        if cert.certified:
            return spec
        logger.info(f"Contour angle {spec.theta:.4f} not certified for alpha={alpha}, mu={mu}; halving offset")
        offset /= 2
    raise CertificateError(f"no certified contour for alpha={alpha}, mu={mu}", certificate=cert)


@dataclass(frozen=True)
class PositivityCertificate:
    alpha: float
    samples: int
    min_quotient: float
    max_cosine_series: float
    min_re_beta: float
    min_ratio: float

    @property
    def certified(self):
        return self.min_quotient > 0 and self.max_cosine_series < 0 and self.min_re_beta > 0 and self.min_ratio > 0


def certify_positivity(alpha, samples=1000):
    """Sampled checks on (0, pi) of the sign facts behind kernel positivity.

    quotient    Im(psi(iy) / (1 + e^{iy})), positive
    cosine      Re bhat(iy), negative
    re_beta     Re(e^{-iy}(e^{iy}-1)^2 betahat(iy)), positive and a positive
                multiple of the same expression with bhat
    """
    y = np.linspace(0, np.pi, samples + 2)[1:-1]
    b_axis = bhat_imaginary_axis(alpha, y)
    quotient = (psi(alpha, 1j * y) / (1 + np.exp(1j * y))).imag
    weight = -2 * (1 - np.cos(y))
    re_b = weight * b_axis.real
    re_beta = weight * (b_axis.real + beta_correction(alpha) * np.cos(y))
    return PositivityCertificate(alpha, samples, float(quotient.min()), float(b_axis.real.max()),
                                 float(re_beta.min()), float((re_beta / re_b).min()))
