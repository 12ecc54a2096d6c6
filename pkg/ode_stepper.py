"""Time stepping for D^(a-1)(y' - y1) + lambda y = f with the L1 and modified L1 schemes."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from errors import ConfigurationError, DomainError, NumericalError
from kernels import ConvolutionHistory, Scheme, build_kernels, check_alpha
from special_fn import power_first_difference
from utils import step_ratio

logger = logging.getLogger(__name__)

GAUSS_ORDER = 8


class SourceTerm:
    """Base class of the closed-form source catalog."""

    def value(self, t):
        raise NotImplementedError

    def integral(self, a, b):
        raise NotImplementedError

    def interval_integrals(self, tau, n):
        """Integrals over [t_k, t_{k+1}] for k = 0..n-1."""
        t = np.arange(n + 1) * tau
        return np.array([self.integral(a, b) for a, b in zip(t[:-1], t[1:])])

    def power_terms(self):
        """(c, gamma) pairs with f = sum c t^gamma, or None if not of that form."""
        return None

    def scaled(self, factor):
        return Scaled(self, factor)


@dataclass(frozen=True)
class Zero(SourceTerm):

    def value(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def integral(self, a, b):
        return 0.0

    def interval_integrals(self, tau, n):
        return np.zeros(n)

    def power_terms(self):
        return []

    def scaled(self, factor):
        return self


@dataclass(frozen=True)
class Power(SourceTerm):
    """c * t**gamma with gamma > -1."""
    c: float
    gamma: float

    def __post_init__(self):
        if self.gamma <= -1:
            raise DomainError(f"power source needs gamma > -1, got {self.gamma}")

    def value(self, t):
        return self.c * np.asarray(t, dtype=float) ** self.gamma

    def integral(self, a, b):
        g = self.gamma + 1
        return self.c * (b ** g - a ** g) / g

    def interval_integrals(self, tau, n):
        g = self.gamma + 1
        return self.c * tau ** g * power_first_difference(g, np.arange(n)) / g

    def power_terms(self):
        return [(self.c, self.gamma)]

    def scaled(self, factor):
        return Power(self.c * factor, self.gamma)


def Constant(c):
    return Power(c, 0.0)


@dataclass(frozen=True)
class Sum(SourceTerm):
    terms: tuple

    def __init__(self, *terms):
        object.__setattr__(self, 'terms', tuple(terms))

    def value(self, t):
        return sum(term.value(t) for term in self.terms)

    def integral(self, a, b):
        return sum(term.integral(a, b) for term in self.terms)

    def interval_integrals(self, tau, n):
        total = np.zeros(n)
        for term in self.terms:
            total += term.interval_integrals(tau, n)
        return total

    def power_terms(self):
        pairs = []
        for term in self.terms:
            inner = term.power_terms()
            if inner is None:
                return None
            pairs.extend(inner)
        return pairs

    def scaled(self, factor):
        return Sum(*(term.scaled(factor) for term in self.terms))


@dataclass(frozen=True)
class Scaled(SourceTerm):
    inner: SourceTerm
    factor: float

    def value(self, t):
        return self.factor * self.inner.value(t)

    def integral(self, a, b):
        return self.factor * self.inner.integral(a, b)

    def interval_integrals(self, tau, n):
        return self.factor * self.inner.interval_integrals(tau, n)

    def power_terms(self):
        inner = self.inner.power_terms()
        if inner is None:
            return None
        return [(self.factor * c, g) for c, g in inner]


@dataclass(frozen=True)
class Tabulated(SourceTerm):
    """Arbitrary callable, integrated per interval with fixed-order Gauss-Legendre."""
    func: object
    order: int = GAUSS_ORDER

    def value(self, t):
        return self.func(np.asarray(t, dtype=float))

    def integral(self, a, b):
        x, w = np.polynomial.legendre.leggauss(self.order)
        half = (b - a) / 2
        return float(half * np.dot(w, self.func(a + half * (x + 1))))

    def interval_integrals(self, tau, n):
        x, w = np.polynomial.legendre.leggauss(self.order)
        left = np.arange(n)[:, None] * tau
        nodes = left + tau / 2 * (x + 1)
        return tau / 2 * (self.func(nodes) @ w)


def source_interval_integral(source, a, b):
    if not 0 <= a < b:
        raise DomainError(f"interval [{a}, {b}] must satisfy 0 <= a < b")
    return float(source.integral(a, b))


@dataclass(frozen=True)
class ScalarProblem:
    y0: float
    y1: float
    lam: float
    source: SourceTerm = field(default_factory=Zero)

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam < 0:
            raise DomainError(f"lambda must be finite and nonnegative, got {self.lam}")


@dataclass
class SolutionHistory:
    tau: float
    values: np.ndarray
    scheme: Scheme
    alpha: float
    mu: float

    @property
    def n(self):
        return len(self.values) - 1

    @property
    def final(self):
        return float(self.values[-1])

    def times(self):
        return np.arange(self.n + 1) * self.tau

    def sample(self, step):
        """Values on the coarser grid with spacing step."""
        return self.values[::step_ratio(step, self.tau)]

    def value_at(self, t):
        ratio = t / self.tau
        k = int(round(ratio))
        if not math.isclose(ratio, k, rel_tol=0, abs_tol=1e-9) or not 0 <= k <= self.n:
            raise ConfigurationError(f"t={t} is not a grid time of this trajectory")
        return float(self.values[k])


def _validate(alpha, tau, n, kt):
    check_alpha(alpha)
    if tau <= 0:
        raise DomainError(f"time step must be positive, got {tau}")
    if int(n) != n or n < 1:
        raise DomainError(f"step count must be a positive integer, got {n}")
    if kt is None:
        return build_kernels(alpha, int(n))
    kt.require(alpha, int(n))
    return kt


def forcing_terms(problem, scheme, alpha, tau, n, kt):
    """tau^(a-1) * integral of f over each interval plus tau * y1 * d_k."""
    d = kt.differences(scheme)
    return tau ** (alpha - 1) * problem.source.interval_integrals(tau, n) + tau * problem.y1 * d[:n]


def solve(problem, scheme, alpha, tau, n, kt=None):
    scheme = Scheme.parse(scheme)
    kt = _validate(alpha, tau, n, kt)
    n = int(n)
    d = kt.differences(scheme)
    mu = problem.lam * tau ** alpha / 2
    pivot = d[0] + mu
    carry = d[0] - mu
    forcing = forcing_terms(problem, scheme, alpha, tau, n, kt)

    values = np.empty(n + 1)
    values[0] = problem.y0
    history = ConvolutionHistory(kt.second_differences(scheme), n)
    for k in range(n):
        values[k + 1] = (forcing[k] - history.combination() + carry * values[k]) / pivot
        history.push(values[k + 1] - values[k])
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"{scheme.value} trajectory overflowed for alpha={alpha}, tau={tau}")
    logger.debug(f"{scheme.value} solve: alpha={alpha}, tau={tau:.3e}, n={n}, mu={mu:.3e}")
    return SolutionHistory(tau, values, scheme, alpha, mu)


def solve_l1(problem, alpha, tau, n, kt=None):
    return solve(problem, Scheme.L1, alpha, tau, n, kt)


def solve_ml1(problem, alpha, tau, n, kt=None):
    return solve(problem, Scheme.ML1, alpha, tau, n, kt)


def recurrence_residual(history, problem, kt):
    """Residuals of the scheme written with second differences of the trajectory."""
    y = history.values
    n = history.n
    d = kt.differences(history.scheme)[:n]
    forcing = forcing_terms(problem, history.scheme, history.alpha, history.tau, n, kt)
    second = y[2:] - 2 * y[1:-1] + y[:-2]
    memory = np.zeros(n)
    if n > 1:
        memory[1:] = np.convolve(second, d)[:n - 1]
    return (y[1] - y[0]) * d + memory + history.mu * (y[:-1] + y[1:]) - forcing
