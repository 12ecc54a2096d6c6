"""Special functions behind the kernels and the exact-solution oracles.

Gamma and zeta are thin, domain-checked wrappers over scipy.special. The
Mittag-Leffler function is evaluated on the negative real axis only, by its
Taylor series near the origin and by a Hankel-contour inverse Laplace
integral further out.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from errors import AccuracyError, DomainError

logger = logging.getLogger(__name__)

ML_SWITCH_RADIUS = 1.0
ML_MAX_TERMS = 400
QUAD_LIMIT = 200
SERIES_CUTOFF = 8
BINOMIAL_TERMS = 12


def gamma(x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise DomainError(f"gamma needs x > 0, got {x}")
    out = special.gamma(x_arr)
    return float(out) if out.ndim == 0 else out


def zeta(s):
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 1):
        raise DomainError(f"zeta needs s > 1, got {s}")
    out = special.zeta(s_arr, 1.0)
    return float(out) if out.ndim == 0 else out


def cpow(z, p):
    """Principal-branch power z**p with arg z in (-pi, pi]."""
    z_arr = np.asarray(z, dtype=complex)
    zero = z_arr == 0
    if np.any(zero) and p <= 0:
        raise DomainError(f"cpow(0, {p}) is undefined")
    with np.errstate(divide='ignore', invalid='ignore'):
        out = np.exp(p * np.log(z_arr))
    out = np.where(zero, 0j, out)
    return complex(out) if out.ndim == 0 else out


def power_first_difference(q, m):
    """(m+1)**q - m**q for integer m >= 0, without cancellation at large m."""
    m = np.asarray(m, dtype=float)
    out = np.ones_like(m)
    pos = m > 0
    mp = m[pos]
    out[pos] = mp ** q * np.expm1(q * np.log1p(1.0 / mp))
    return out


def power_second_difference(q, m):
    """(m+1)**q - 2 m**q + (m-1)**q for integer m >= 1.

    Small m use the direct formula; larger m sum the even part of the
    binomial expansion, which keeps full relative accuracy.
    """
    m = np.asarray(m, dtype=float)
    if np.any(m < 1):
        raise DomainError("second differences need m >= 1")
    out = np.empty_like(m)
    small = m < SERIES_CUTOFF
    ms = m[small]
    out[small] = (ms + 1) ** q - 2 * ms ** q + (ms - 1) ** q
    ml = m[~small]
    total = np.zeros_like(ml)
    for j in range(1, BINOMIAL_TERMS + 1):
        total += special.binom(q, 2 * j) * ml ** (q - 2 * j)
    out[~small] = 2 * total
    return out


@dataclass(frozen=True)
class MlParams:
    alpha: float
    beta: float
    tolerance: float = 1e-12

    def __post_init__(self):
        # alpha = 1 and alpha = 2 are the exponential and cosine limits.
        if not 0 < self.alpha <= 2:
            raise DomainError(f"Mittag-Leffler order must lie in (0, 2], got {self.alpha}")
        if self.beta <= 0:
            raise DomainError(f"Mittag-Leffler type must be positive, got {self.beta}")
        if self.tolerance <= 0:
            raise DomainError("tolerance must be positive")


def _ml_series(alpha, beta, x, tol):
    total = 0.0
    power = 1.0
    for k in range(ML_MAX_TERMS):
        term = power * special.rgamma(alpha * k + beta)
        total += term
        if k > abs(x) + 2 and abs(term) <= 1e-3 * tol * max(1.0, abs(total)):
            return total
        power *= x
    raise AccuracyError(f"Mittag-Leffler series did not converge at x={x}",
                        estimate=abs(term), tolerance=tol)


def _ml_contour(alpha, beta, x, tol):
    if not 1 < alpha <= 2:
        raise DomainError(f"contour branch needs 1 < alpha <= 2, got {alpha}")
    if x >= 0:
        raise DomainError("contour branch needs x < 0")
    # E(a, b, x) = (E(a, b - a, x) - 1/Gamma(b - a)) / x keeps the cut weight integrable.
    if beta >= alpha + 1:
        inner = _ml_contour(alpha, beta - alpha, x, tol * abs(x))
        return (inner - special.rgamma(beta - alpha)) / x

    lam = -x
    sin_b = math.sin(math.pi * beta)
    sin_ab = math.sin(math.pi * (alpha - beta))
    cos_a = math.cos(math.pi * alpha)

    def kernel(r):
        ra = r ** alpha
        return math.exp(-r) * (ra * sin_b - lam * sin_ab) / (ra * ra + 2 * lam * ra * cos_a + lam * lam)

    def tail(r):
        return r ** (alpha - beta) * kernel(r)

    head, err_head = integrate.quad(kernel, 0.0, 1.0, weight='alg', wvar=(alpha - beta, 0.0),
                                    epsabs=tol / 4, epsrel=0.0, limit=QUAD_LIMIT)
    rest, err_rest = integrate.quad(tail, 1.0, np.inf, epsabs=tol / 4, epsrel=0.0, limit=QUAD_LIMIT)
    estimate = (err_head + err_rest) / math.pi
    if estimate > tol:
        raise AccuracyError(f"Mittag-Leffler contour quadrature at x={x} missed tolerance",
                            estimate=estimate, tolerance=tol)

    pole = lam ** (1.0 / alpha) * complex(math.cos(math.pi / alpha), math.sin(math.pi / alpha))
    residue = (2.0 / alpha) * (np.exp(pole) * cpow(pole, 1.0 - beta)).real
    return residue + (head + rest) / math.pi


def mittag_leffler(params, x, branch='auto'):
    """E_{alpha,beta}(x) for real x <= 0."""
    if x > 0:
        raise DomainError(f"mittag_leffler is only supported for x <= 0, got {x}")
    alpha, beta, tol = params.alpha, params.beta, params.tolerance
    if branch == 'auto':
        branch = 'series' if abs(x) <= ML_SWITCH_RADIUS or alpha <= 1 else 'contour'
    if branch == 'series':
        return float(_ml_series(alpha, beta, x, tol))
    if branch == 'contour':
        return float(_ml_contour(alpha, beta, x, tol))
    raise DomainError(f"unknown Mittag-Leffler branch {branch!r}")
