"""Reference solutions for the scalar problem.

Three independent routes: the Mittag-Leffler closed form of the exact
solution, the same solution as a contour integral of its Laplace transform,
and the discrete solution of either scheme as a contour integral of its
generating function.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, special

from errors import AccuracyError, ConfigurationError, DomainError
from kernels import Scheme, bhat_scaled, certify_denominator, check_alpha
from ode_stepper import solve
from special_fn import MlParams, cpow, mittag_leffler
from utils import step_ratio

logger = logging.getLogger(__name__)

TRUNCATION = 40.0
FINE_FACTOR = 8
INNER_FLOOR = 1e-150


class Method(str, Enum):
    MITTAG_LEFFLER = 'MittagLeffler'
    CONTOUR = 'ContourY'


@dataclass(frozen=True)
class ExactEval:
    problem: object
    alpha: float
    method: Method = Method.MITTAG_LEFFLER
    tolerance: float = 1e-12
    theta: float = None

    def __post_init__(self):
        check_alpha(self.alpha)
        if self.tolerance <= 0:
            raise DomainError("tolerance must be positive")


def _gauss_sum(func, edges, order):
    x, w = np.polynomial.legendre.leggauss(order)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    return np.sum((half[:, None] * w).ravel() * func(nodes))


def _split(edges):
    mids = (edges[1:] + edges[:-1]) / 2
    out = np.empty(2 * len(edges) - 1)
    out[0::2] = edges
    out[1::2] = mids
    return out


def composite_gauss(func, edges, order=16, tolerance=1e-12, max_refinements=6):
    """Composite Gauss-Legendre, halving every panel until two passes agree."""
    edges = np.asarray(edges, dtype=float)
    previous = _gauss_sum(func, edges, order)
    for _ in range(max_refinements):
        edges = _split(edges)
        current = _gauss_sum(func, edges, order)
        change = abs(current - previous)
        if change <= tolerance * max(1.0, abs(current)):
            return current
        previous = current
    raise AccuracyError(f"contour quadrature did not settle after {max_refinements} refinements",
                        estimate=float(change), tolerance=tolerance)


def _ml(alpha, beta, x, tol):
    return mittag_leffler(MlParams(alpha, beta, tol), x)


def _exact_mittag_leffler(e, t):
    p, a, tol = e.problem, e.alpha, e.tolerance
    x = -p.lam * t ** a
    value = p.y0 * _ml(a, 1.0, x, tol) + t * p.y1 * _ml(a, 2.0, x, tol)
    terms = p.source.power_terms()
    if terms is not None:
        for c, g in terms:
            value += c * special.gamma(g + 1) * t ** (a + g) * _ml(a, a + g + 1, x, tol)
        return value

    def duhamel(s):
        return _ml(a, a, -p.lam * s ** a, tol) * float(p.source.value(t - s))

    forced, err = integrate.quad(duhamel, 0.0, t, weight='alg', wvar=(a - 1, 0.0), limit=200)
    if err > 10 * tol:
        raise AccuracyError(f"Duhamel quadrature at t={t} missed tolerance", estimate=err, tolerance=tol)
    return value + forced


def _contour_angle(alpha):
    return 0.5 * (math.pi / 2 + math.pi / alpha)


def _contour_integrand(e, t):
    p, a = e.problem, e.alpha
    terms = p.source.power_terms()
    if terms is None:
        raise ConfigurationError("the contour form needs a source built from powers of t")
    shift = p.lam * t ** a

    def g(s):
        top = p.y0 * cpow(s, a - 1) + t * p.y1 * cpow(s, a - 2)
        for c, gam in terms:
            top = top + c * special.gamma(gam + 1) * t ** (a + gam) * cpow(s, -gam - 1)
        return np.exp(s) * top / (cpow(s, a) + shift)

    return g


def _path_integral(g, angle, eps, radius, tol):
    """Arc of radius eps from angle 0 to angle, then the ray out to radius."""
    def on_arc(phi):
        z = eps * np.exp(1j * phi)
        return g(z) * 1j * z

    direction = np.exp(1j * angle)

    def on_ray(r):
        return g(r * direction) * direction

    arc_edges = np.linspace(0.0, angle, 5)
    ray_edges = np.union1d(np.geomspace(eps, max(eps, 1.0), 6),
                           np.linspace(eps, radius, int(math.ceil(radius - eps)) + 2))
    return (composite_gauss(on_arc, arc_edges, tolerance=tol)
            + composite_gauss(on_ray, ray_edges, tolerance=tol))


def _exact_contour(e, t, halve=True):
    p, a = e.problem, e.alpha
    theta = e.theta if e.theta is not None else _contour_angle(a)
    if not math.pi / 2 < theta < math.pi / a:
        raise DomainError(f"contour angle {theta} must lie in (pi/2, pi/alpha)")
    pole = t * p.lam ** (1 / a) if p.lam > 0 else 0.0
    eps = 0.5 * min(1.0, pole) if pole > 0 else 1.0
    radius = TRUNCATION / abs(math.cos(theta))
    g = _contour_integrand(e, t)
    upper = _path_integral(g, theta, eps, radius, e.tolerance)
    if halve:
        return upper.imag / math.pi
    lower = -_path_integral(g, -theta, eps, radius, e.tolerance)
    return ((upper + lower) / (2j * math.pi)).real


def exact_scalar(e, t, halve=True):
    if t <= 0:
        raise DomainError(f"exact solution is evaluated at t > 0, got {t}")
    if Method(e.method) is Method.MITTAG_LEFFLER:
        return float(_exact_mittag_leffler(e, t))
    return float(_exact_contour(e, t, halve=halve))


def _ray_edges(alpha, spec, k, tolerance):
    radius = spec.clipped_radius
    inner = max(INNER_FLOOR, (tolerance * (alpha - 1)) ** (1 / (alpha - 1)))
    levels = int(math.ceil(math.log(inner / radius) / math.log(spec.grading)))
    graded = radius * spec.grading ** np.arange(levels + 1)
    uniform = np.linspace(0.0, radius, spec.panels * (1 + int(math.ceil(k * radius / math.pi))) + 1)
    return np.union1d(np.append(graded, 0.0), uniform)


def _upper_ray(alpha, spec, k, integrand):
    direction = np.exp(1j * spec.theta)

    def on_ray(r):
        return integrand(r * direction) * direction

    edges = _ray_edges(alpha, spec, k, spec.tolerance)
    value = composite_gauss(on_ray, edges, spec.order, spec.tolerance, spec.max_refinements)
    return value.imag / math.pi


def _check_contour(alpha, mu, spec, scheme):
    spec.validate_for(alpha)
    certify_denominator(alpha, mu, spec, scheme=scheme).require()


def discrete_contour(alpha, mu, kt, spec, y0, y1, k, tau=1.0, scheme=Scheme.L1):
    """Level k of the unforced scheme from its generating function on the clipped contour."""
    scheme = Scheme.parse(scheme)
    kt.require(alpha, 1)
    if k < 0:
        raise DomainError("level must be nonnegative")
    if k == 0:
        return float(y0)
    if y0 == 0 and y1 == 0:
        return 0.0
    _check_contour(alpha, mu, spec, scheme)
    modified = scheme is Scheme.ML1

    def integrand(z):
        em1 = np.expm1(z)
        sym = np.exp(-z) * bhat_scaled(alpha, z, 3, modified)
        top = (bhat_scaled(alpha, z, 2, modified) - sym / 2 + mu * em1 / 2) * y0
        if y1:
            top = top + tau * y1 * bhat_scaled(alpha, z, 1, modified)
        return np.exp(k * z) * top / (sym + mu * (em1 + 2))

    return float(_upper_ray(alpha, spec, k, integrand))


def discrete_kernel(alpha, mu, spec, j, scheme=Scheme.L1):
    """E_j: response at level j to a unit forcing at level 0."""
    scheme = Scheme.parse(scheme)
    if j <= 0:
        return 0.0
    _check_contour(alpha, mu, spec, scheme)
    modified = scheme is Scheme.ML1

    def integrand(z):
        em1 = np.expm1(z)
        sym = np.exp(-z) * bhat_scaled(alpha, z, 3, modified)
        return np.exp(j * z) / (sym + mu * (em1 + 2))

    return float(_upper_ray(alpha, spec, j, integrand))


def discrete_contour_forced(alpha, mu, spec, forcing, k, scheme=Scheme.L1):
    """sum_{j<k} F_j E_{k-j} for forcing values F_j that already carry tau^(a-1)."""
    forcing = np.asarray(forcing, dtype=float)
    if k > len(forcing):
        raise ConfigurationError(f"level {k} needs {k} forcing values, got {len(forcing)}")
    kernel = np.array([discrete_kernel(alpha, mu, spec, m, scheme) for m in range(1, k + 1)])
    return float(np.dot(forcing[:k][::-1], kernel))


def fine_grid_reference(scheme, problem, alpha, tau_ref, steps=(), final_time=1.0, kt=None):
    """Trajectory at tau_ref; every study step must be a multiple of it, at least FINE_FACTOR times larger."""
    for step in steps:
        ratio = step_ratio(step, tau_ref)
        if ratio < FINE_FACTOR:
            raise ConfigurationError(f"reference step {tau_ref} is only {ratio}x finer than study step {step}")
    n = step_ratio(final_time, tau_ref)
    logger.info(f"Fine reference: {Scheme.parse(scheme).value}, alpha={alpha}, tau_ref={tau_ref:.3e}, n={n}")
    return solve(problem, scheme, alpha, tau_ref, n, kt)
