"""P1 finite elements on (0, 1) with homogeneous Dirichlet conditions.

Only interior hat functions are kept, so mass and stiffness are N x N
symmetric tridiagonal matrices stored as (diagonal, off-diagonal).
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.sparse import diags
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from errors import ConfigurationError, DomainError, NumericalError
from special_fn import power_second_difference
from utils import step_ratio

logger = logging.getLogger(__name__)

DENSE_EIGEN_LIMIT = 256


@dataclass(frozen=True)
class Mesh1D:
    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise DomainError(f"mesh needs at least two cells, got {self.n_cells}")

    @classmethod
    def from_step(cls, h):
        return cls(step_ratio(1.0, h))

    @property
    def h(self):
        return 1.0 / self.n_cells

    @property
    def dim(self):
        return self.n_cells - 1

    @property
    def nodes(self):
        return np.arange(self.n_cells + 1) * self.h

    @property
    def interior(self):
        return self.nodes[1:-1]


@dataclass(frozen=True)
class Tridiagonal:
    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        if len(self.off) != max(len(self.diag) - 1, 0):
            raise ConfigurationError("off-diagonal length must be one less than the diagonal")

    @property
    def size(self):
        return len(self.diag)

    def __matmul__(self, v):
        out = self.diag * v if np.ndim(v) == 1 else self.diag[:, None] * v
        off = self.off if np.ndim(v) == 1 else self.off[:, None]
        out[:-1] += off * v[1:]
        out[1:] += off * v[:-1]
        return out

    def combine(self, a, other, b):
        """a * self + b * other."""
        return Tridiagonal(a * self.diag + b * other.diag, a * self.off + b * other.off)

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def to_sparse(self):
        return diags([self.off, self.diag, self.off], [-1, 0, 1], format='csc')

    def factorize(self):
        return TridiagonalFactor.of(self)


@dataclass(frozen=True)
class TridiagonalFactor:
    banded: np.ndarray

    @classmethod
    def of(cls, matrix):
        ab = np.zeros((2, matrix.size))
        ab[0, 1:] = matrix.off
        ab[1] = matrix.diag
        try:
            return cls(linalg.cholesky_banded(ab, lower=False))
        except linalg.LinAlgError as exc:
            raise NumericalError(f"tridiagonal matrix lost positivity during factorization: {exc}") from exc

    def solve(self, rhs):
        return linalg.cho_solve_banded((self.banded, False), rhs, check_finite=False)


def tridiag_solve(matrix, rhs):
    return matrix.factorize().solve(np.asarray(rhs, dtype=float))


@dataclass(frozen=True)
class FemOperators:
    mesh: Mesh1D
    mass: Tridiagonal
    stiffness: Tridiagonal

    @cached_property
    def mass_factor(self):
        return self.mass.factorize()

    @cached_property
    def stiffness_factor(self):
        return self.stiffness.factorize()


def assemble(mesh):
    n, h = mesh.dim, mesh.h
    mass = Tridiagonal(np.full(n, 4 * h / 6), np.full(n - 1, h / 6))
    stiffness = Tridiagonal(np.full(n, 2 / h), np.full(n - 1, -1 / h))
    return FemOperators(mesh, mass, stiffness)


def load_power(mesh, s, scale=1.0):
    """Exact moments of scale * x**s against every interior hat.

    With x = h t the moment against the hat at node i is h^(s+1) times the
    second difference of t^(s+2)/((s+1)(s+2)) at t = i.
    """
    if s <= -1:
        raise DomainError(f"load exponent must exceed -1, got {s}")
    if scale == 0:
        return np.zeros(mesh.dim)
    i = np.arange(1, mesh.n_cells)
    return scale * mesh.h ** (s + 1) * power_second_difference(s + 2, i) / ((s + 1) * (s + 2))


@dataclass(frozen=True)
class PowerLoad:
    """scale * x**s as a load on any mesh."""
    s: float
    scale: float = 1.0

    def vector(self, mesh):
        return load_power(mesh, self.s, self.scale)


@dataclass(frozen=True)
class VectorLoad:
    """A load vector given directly for one mesh."""
    values: np.ndarray = field(repr=False)

    def vector(self, mesh):
        if len(self.values) != mesh.dim:
            raise ConfigurationError(f"load has {len(self.values)} entries, mesh has {mesh.dim} unknowns")
        return np.asarray(self.values, dtype=float)


def l2_project(ops, load):
    load = np.asarray(load, dtype=float)
    if load.shape[0] != ops.mesh.dim:
        raise ConfigurationError(f"load has {load.shape[0]} entries, mesh has {ops.mesh.dim} unknowns")
    return ops.mass_factor.solve(load)


def l2_norm(ops, field_values):
    return math.sqrt(max(float(field_values @ (ops.mass @ field_values)), 0.0))


def dual_norm(ops, load):
    """sqrt(load' A^-1 load), the discrete H^-1 size of a load."""
    load = np.asarray(load, dtype=float)
    return math.sqrt(max(float(load @ ops.stiffness_factor.solve(load)), 0.0))


def prolong(field_values, coarse, fine):
    """Exact injection of a P1 field into a nested finer mesh."""
    step_ratio(fine.n_cells, coarse.n_cells)
    full = np.concatenate([[0.0], field_values, [0.0]])
    return np.interp(fine.interior, coarse.nodes, full)


def eigenpairs(ops):
    """All generalized eigenpairs A phi = lam M phi, phi M-orthonormal."""
    if ops.mesh.dim > DENSE_EIGEN_LIMIT:
        raise ConfigurationError(f"dense eigen decomposition is limited to {DENSE_EIGEN_LIMIT} unknowns")
    try:
        return linalg.eigh(ops.stiffness.to_dense(), ops.mass.to_dense())
    except linalg.LinAlgError as exc:
        raise NumericalError(f"generalized eigenproblem failed: {exc}") from exc


def eigen_smallest(ops):
    """(lambda_min, lambda_max) of the pencil A c = lambda M c."""
    if ops.mesh.dim <= DENSE_EIGEN_LIMIT:
        values = eigenpairs(ops)[0]
        return float(values[0]), float(values[-1])
    a, m = ops.stiffness.to_sparse(), ops.mass.to_sparse()
    try:
        # the P1 pencil spectrum lies below 12/h^2
        top = eigsh(a, k=1, M=m, sigma=12 / ops.mesh.h ** 2, which='LM', return_eigenvectors=False)
        bottom = eigsh(a, k=1, M=m, sigma=0, which='LM', return_eigenvectors=False)
    except (ArpackNoConvergence, ArpackError) as exc:
        raise NumericalError(f"extreme eigenvalue iteration did not converge: {exc}") from exc
    logger.debug(f"Pencil spectrum on {ops.mesh.dim} unknowns: [{bottom[0]:.6g}, {top[0]:.6g}]")
    return float(bottom[0]), float(top[0])
