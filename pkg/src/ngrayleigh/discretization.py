"""Finite-difference surrogate of W^{1,2}_0 on intervals and rectangles.

Interior nodes are ordered lexicographically (last axis fastest) with an
implicit zero boundary.  Integrals use the nodal rectangle rule with cell
measure ``prod(h)``; together with the 3-/5-point stencil this makes
``energy_gradient`` the exact gradient of the discrete energy.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import DomainError, ValidationError
from .fibering import Exponents, NormTuple, quotient_value_and_partials


@dataclass(frozen=True)
class GridSpec:
    dim: int
    lengths: tuple
    n: tuple

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "n", n)
        if self.dim not in (1, 2):
            raise ValidationError(f"grid dim must be 1 or 2, got {self.dim}")
        if len(lengths) != self.dim or len(n) != self.dim:
            raise ValidationError("lengths and n need one entry per axis")
        if any(v < 3 for v in n):
            raise ValidationError(f"need at least 3 interior nodes per axis, got {n}")
        if any(not (v > 0 and math.isfinite(v)) for v in lengths):
            raise ValidationError(f"axis lengths must be positive, got {lengths}")

    @classmethod
    def interval(cls, n, length=1.0):
        return cls(1, (length,), (n,))

    @classmethod
    def rectangle(cls, nx, ny, lx=1.0, ly=1.0):
        return cls(2, (lx, ly), (nx, ny))

    @property
    def spacing(self):
        return tuple(L / (k + 1) for L, k in zip(self.lengths, self.n))

    @property
    def measure(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def shape(self):
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    def axes(self):
        """Interior node coordinates per axis."""
        return [h * np.arange(1, k + 1) for h, k in zip(self.spacing, self.n)]

    def coordinates(self):
        return np.meshgrid(*self.axes(), indexing="ij")


class DiscreteField:
    """Immutable interior nodal values on a grid."""

    __slots__ = ("values", "grid")

    def __init__(self, values, grid: GridSpec):
        v = np.array(values, dtype=float).reshape(-1)
        if v.size != grid.size:
            raise ValidationError(f"expected {grid.size} nodal values, got {v.size}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "grid", grid)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteField is immutable")

    def __repr__(self):
        return f"DiscreteField(grid={self.grid}, max={self.max_abs():.6g})"

    @classmethod
    def from_function(cls, grid: GridSpec, f):
        return cls(f(*grid.coordinates()), grid)

    def with_values(self, values):
        return DiscreteField(values, self.grid)

    def scaled(self, k):
        return DiscreteField(k * self.values, self.grid)

    def abs(self):
        return DiscreteField(np.abs(self.values), self.grid)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def as_array(self):
        return self.values.reshape(self.grid.shape)


def sine_bump(grid: GridSpec) -> DiscreteField:
    """Product of sine half-waves: the discrete first Dirichlet eigenfunction."""
    return DiscreteField.from_function(
        grid, lambda *xs: np.prod([np.sin(np.pi * x / L) for x, L in zip(xs, grid.lengths)], axis=0))


@functools.lru_cache(maxsize=32)
def laplacian(grid: GridSpec):
    """Sparse ``-Δ_h`` (symmetric positive definite) on the interior nodes."""
    ops = []
    for h, k in zip(grid.spacing, grid.n):
        ops.append(sp.diags([-np.ones(k - 1), 2 * np.ones(k), -np.ones(k - 1)], [-1, 0, 1]) / h**2)
    if grid.dim == 1:
        return sp.csc_matrix(ops[0])
    nx, ny = grid.n
    return sp.csc_matrix(sp.kron(ops[0], sp.identity(ny)) + sp.kron(sp.identity(nx), ops[1]))


@functools.lru_cache(maxsize=32)
def _laplacian_lu(grid: GridSpec):
    return splu(laplacian(grid))


def solve_laplacian(grid: GridSpec, rhs):
    """Solve ``-Δ_h g = rhs``."""
    return _laplacian_lu(grid).solve(np.asarray(rhs, dtype=float))


def signed_power(v, p):
    """``|v|^{p-2} v``, the derivative of ``|v|^p / p``; zero at ``v = 0``."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.abs(v) ** (p - 1)


def _values(u):
    return u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=float)


def gradient_energy(u: DiscreteField) -> float:
    """Discrete Dirichlet energy: sum over edges of (difference/h)² times cell measure."""
    arr = u.as_array()
    total = 0.0
    for axis, h in enumerate(u.grid.spacing):
        pad = [(0, 0)] * arr.ndim
        pad[axis] = (1, 1)
        diffs = np.diff(np.pad(arr, pad), axis=axis)
        total += float(np.sum(diffs**2)) / h**2
    return total * u.grid.measure


def lp_mass(u: DiscreteField, p: float) -> float:
    """Rectangle-rule quadrature of ``∫|u|^p``."""
    if not p > 1:
        raise DomainError(f"exponent p must exceed 1, got {p}")
    return float(np.sum(np.abs(u.values) ** p)) * u.grid.measure


def norm_tuple(u: DiscreteField, ex: Exponents) -> NormTuple:
    if not np.any(u.values):
        raise DomainError("norm tuple of the zero field is undefined")
    return NormTuple(gradient_energy(u), lp_mass(u, ex.q), lp_mass(u, ex.alpha), lp_mass(u, ex.gamma))


def energy(u: DiscreteField, lam, mu, ex: Exponents) -> float:
    """Discrete ``Φ_{λ,μ}(u)``."""
    a = gradient_energy(u)
    if not np.any(u.values):
        return 0.0
    return (0.5 * a + lam / ex.q * lp_mass(u, ex.q) - mu / ex.alpha * lp_mass(u, ex.alpha)
            - lp_mass(u, ex.gamma) / ex.gamma)


def _nonlinearity(v, lam, mu, ex):
    return signed_power(v, ex.gamma) + mu * signed_power(v, ex.alpha) - lam * signed_power(v, ex.q)


def energy_gradient(u: DiscreteField, lam, mu, ex: Exponents) -> DiscreteField:
    """Nodal gradient of the discrete energy."""
    v = u.values
    r = laplacian(u.grid) @ v - _nonlinearity(v, lam, mu, ex)
    return u.with_values(r * u.grid.measure)


def pde_residual(u: DiscreteField, lam, mu, ex: Exponents) -> float:
    """Max-norm of the strong-form residual ``-Δ_h u - f(u)``."""
    v = u.values
    r = laplacian(u.grid) @ v - _nonlinearity(v, lam, mu, ex)
    return float(np.max(np.abs(r))) if r.size else 0.0


def norm_tuple_gradients(u: DiscreteField, ex: Exponents):
    """Rows: nodal gradients of ``a, b, c, d`` with respect to the field values."""
    v, m = u.values, u.grid.measure
    return np.vstack([
        2.0 * m * (laplacian(u.grid) @ v),
        ex.q * m * signed_power(v, ex.q),
        ex.alpha * m * signed_power(v, ex.alpha),
        ex.gamma * m * signed_power(v, ex.gamma),
    ])


def quotient_gradient(which: str, u: DiscreteField, lam, ex: Exponents, nt=None):
    """Nodal gradient of ``u -> Quotient(t_crit(u) u)``.

    Only partials at fixed ``t`` enter (the fiber derivative vanishes at its
    critical point).  For the ``mu_e_*`` quotients this coincides with
    ``alpha t^{1-alpha} / c * energy_gradient(t u, lam, value)``.
    Raises ``DomainError`` when ``lam`` is outside the quotient's range.
    """
    nt = nt or norm_tuple(u, ex)
    res = quotient_value_and_partials(which, lam, nt, ex)
    if res is None:
        kind = which.split("_")[1]
        raise DomainError(f"{which} undefined: lambda={lam} exceeds lambda_star_{kind}(u)")
    _, partials, _ = res
    return u.with_values(partials @ norm_tuple_gradients(u, ex))


def h1_inner(u: DiscreteField, v) -> float:
    return float(_values(u) @ (laplacian(u.grid) @ _values(v))) * u.grid.measure


def sobolev_gradient(g: DiscreteField) -> DiscreteField:
    """Riesz representative of a nodal gradient in the ``‖·‖₁`` inner product."""
    return g.with_values(solve_laplacian(g.grid, g.values / g.grid.measure))


def normalize_h1(u: DiscreteField) -> DiscreteField:
    return u.scaled(1.0 / math.sqrt(gradient_energy(u)))


def write_field_csv(u: DiscreteField, path):
    with open(path, "w", newline="") as fh:
        fh.write("node_index,value\n")
        for i, v in enumerate(u.values):
            fh.write(f"{i},{v:.17g}\n")


def read_field_csv(path, grid: GridSpec) -> DiscreteField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    order = np.argsort(data[:, 0])
    return DiscreteField(data[order, 1], grid)
