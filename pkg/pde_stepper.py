"""Full discretizations of the fractional wave equation: L1 or modified L1 in time, P1 in space.

Every step solves (d_0 M + tau^a/2 A) U_{k+1} = M (d_0 U_k - H_k) - tau^a/2 A U_k + loads,
the mass-weighted form of the scheme. M times the coefficients of P_h g is the
load vector of g, so projections on the right-hand side are never formed.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from errors import ConfigurationError, NumericalError
from fem1d import assemble, dual_norm, eigen_smallest, eigenpairs, l2_norm
from kernels import ConvolutionHistory, Scheme, build_kernels, check_alpha
from ode_stepper import ScalarProblem, SourceTerm, Zero, solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PdeProblem:
    """u0, u1 and g are load generators (PowerLoad, VectorLoad) or None; f(x, t) = g(x) q(t)."""
    u0: object = None
    u1: object = None
    g: object = None
    q: SourceTerm = field(default_factory=Zero)

    def loads(self, mesh):
        return tuple(np.zeros(mesh.dim) if load is None else load.vector(mesh) for load in (self.u0, self.u1, self.g))


@dataclass
class PdeHistory:
    tau: float
    alpha: float
    mesh: object
    scheme: Scheme
    states: np.ndarray
    mu_max: float = None

    @property
    def n(self):
        return len(self.states) - 1

    @property
    def final(self):
        return self.states[-1]


def _prepare(alpha, tau, n, mesh, kt, ops):
    check_alpha(alpha)
    if tau <= 0 or int(n) != n or n < 1:
        raise ConfigurationError(f"need tau > 0 and a positive step count, got tau={tau}, n={n}")
    if kt is None:
        kt = build_kernels(alpha, int(n))
    else:
        kt.require(alpha, int(n))
    if ops is None:
        ops = assemble(mesh)
    elif ops.mesh != mesh:
        raise ConfigurationError("operators were assembled on a different mesh")
    return kt, ops


def _time_loads(problem, scheme, alpha, tau, n, kt):
    return (tau ** (alpha - 1) * problem.q.interval_integrals(tau, n),
            tau * kt.differences(scheme)[:n])


def solve_pde(problem, scheme, alpha, tau, n, mesh, kt=None, ops=None, diffusion=1.0):
    """diffusion scales the stiffness; 0 switches the Laplacian off."""
    scheme = Scheme.parse(scheme)
    kt, ops = _prepare(alpha, tau, n, mesh, kt, ops)
    n = int(n)
    d = kt.differences(scheme)
    half = diffusion * tau ** alpha / 2
    mass, stiffness = ops.mass, ops.stiffness
    factor = mass.combine(d[0], stiffness, half).factorize()
    u0_load, u1_load, g_load = problem.loads(mesh)
    source_weights, velocity_weights = _time_loads(problem, scheme, alpha, tau, n, kt)

    states = np.empty((n + 1, mesh.dim))
    states[0] = ops.mass_factor.solve(u0_load)
    history = ConvolutionHistory(kt.second_differences(scheme), n, shape=(mesh.dim,))
    for k in range(n):
        current = states[k]
        rhs = (mass @ (d[0] * current - history.combination()) - half * (stiffness @ current)
               + source_weights[k] * g_load + velocity_weights[k] * u1_load)
        states[k + 1] = factor.solve(rhs)
        history.push(states[k + 1] - current)
    if not np.all(np.isfinite(states)):
        raise NumericalError(f"{scheme.value} PDE run overflowed for alpha={alpha}, tau={tau}, h={mesh.h}")
    logger.debug(f"{scheme.value} PDE solve: alpha={alpha}, tau={tau:.3e}, h={mesh.h:.3e}, n={n}")
    return PdeHistory(tau, alpha, mesh, scheme, states)


def spectral_decompose_solve(problem, scheme, alpha, tau, n, mesh, kt=None, ops=None):
    """Same scheme through the M-orthonormal eigenbasis, one scalar recurrence per mode."""
    scheme = Scheme.parse(scheme)
    kt, ops = _prepare(alpha, tau, n, mesh, kt, ops)
    n = int(n)
    lams, modes = eigenpairs(ops)
    u0_load, u1_load, g_load = problem.loads(mesh)
    a0, a1, ag = modes.T @ u0_load, modes.T @ u1_load, modes.T @ g_load
    coefficients = np.empty((n + 1, mesh.dim))
    for i, lam in enumerate(lams):
        mode = ScalarProblem(a0[i], a1[i], max(float(lam), 0.0), problem.q.scaled(ag[i]))
        coefficients[:, i] = solve(mode, scheme, alpha, tau, n, kt).values
    return PdeHistory(tau, alpha, mesh, scheme, coefficients @ modes.T,
                      mu_max=float(lams[-1]) * tau ** alpha / 2)


def recurrence_residual(history, problem, kt, ops):
    """Mass-weighted residual of the scheme in second-difference form, per level, relative."""
    u = history.states
    n, alpha, tau = history.n, history.alpha, history.tau
    d = kt.differences(history.scheme)[:n]
    half = tau ** alpha / 2
    _, u1_load, g_load = problem.loads(history.mesh)
    source_weights, velocity_weights = _time_loads(problem, history.scheme, alpha, tau, n, kt)
    second = u[2:] - 2 * u[1:-1] + u[:-2]
    out = np.empty(n)
    scale = 1.0
    for k in range(n):
        memory = d[k] * (u[1] - u[0])
        if k:
            memory = memory + d[k - 1::-1] @ second[:k]
        lhs = ops.mass @ memory + half * (ops.stiffness @ (u[k] + u[k + 1]))
        rhs = source_weights[k] * g_load + velocity_weights[k] * u1_load
        out[k] = np.abs(lhs - rhs).max()
        scale = max(scale, np.abs(ops.mass @ u[k + 1]).max() * d[0], np.abs(rhs).max())
    return out / scale


def l2_error(a, b, ops):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape or a.shape[0] != ops.mesh.dim:
        raise ConfigurationError(f"fields of shape {a.shape} and {b.shape} do not live on a {ops.mesh.dim}-unknown mesh")
    return l2_norm(ops, a - b)


@dataclass(frozen=True)
class RatioReport:
    ratio: float
    mu_max: float
    lambda_max: float

    @property
    def warning(self):
        return self.ratio > 1


def ratio_diagnostic(mesh, alpha, tau, ops=None):
    """tau^a/h^2 and the largest mu = lambda_max tau^a/2."""
    check_alpha(alpha)
    ops = ops or assemble(mesh)
    lam_max = eigen_smallest(ops)[1]
    report = RatioReport(tau ** alpha / mesh.h ** 2, lam_max * tau ** alpha / 2, lam_max)
    if report.warning:
        logger.warning(f"tau^alpha/h^2 = {report.ratio:.3g} > 1 at alpha={alpha}, tau={tau:.3e}, h={mesh.h:.3e}")
    return report


def stability_bound(history, problem, ops, constant=5.0):
    """constant * (||P_h u0|| + t_k^(1-a/2) ||u1||_-1) for every level k >= 1."""
    u0_load, u1_load, _ = problem.loads(history.mesh)
    start = l2_norm(ops, ops.mass_factor.solve(u0_load))
    t = np.arange(1, history.n + 1) * history.tau
    return constant * (start + t ** (1 - history.alpha / 2) * dual_norm(ops, u1_load))


def state_norms(history, ops):
    return np.array([l2_norm(ops, state) for state in history.states])
