"""Positive solution branches via reduced fibering functionals.

Branch 1 minimizes ``u -> Φ(s1(u) u)`` (the fiber's local minimum point) and
branch 2 minimizes ``u -> Φ(s2(u) u)`` (the fiber point past the local max of
``rayleigh_n``).  Both run on the unit sphere of ``‖·‖₁`` with the envelope
gradient ``s * energy_gradient(s u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .descent import DescentOptions, sphere_descent
from .discretization import (
    DiscreteField, GridSpec, energy, energy_gradient, gradient_energy, laplacian, lp_mass,
    norm_tuple, normalize_h1, pde_residual, signed_power, sine_bump,
)
from .errors import BandViolation, DomainError, UnsupportedRegimeError, ValidationError
from .fibering import (
    TOL_ROOT, Exponents, RootTriple, nehari_roots, phi_d2, rayleigh_n_d1, rayleigh_n_d2,
)

SIGN_RTOL = 1e-9


@dataclass
class SolveReport:
    solution: DiscreteField
    branch: Optional[int]
    lam: float
    mu: float
    phi_value: float
    phi_d2_sign: str
    rn_d1_sign: str
    rn_d2_sign: str
    residual: float
    positive: bool
    nehari_gap: float
    s_roots: RootTriple
    converged: bool = True
    iterations: int = 0
    gradient_norm: float = 0.0
    status: str = "converged"
    diagnostics: dict = field(default_factory=dict)

    def to_text(self) -> str:
        s = self.s_roots
        rows = [
            ("branch", "-" if self.branch is None else self.branch),
            ("status", self.status),
            ("lambda", _g(self.lam)),
            ("mu", _g(self.mu)),
            ("converged", str(self.converged).lower()),
            ("iterations", self.iterations),
            ("gradient_norm", _g(self.gradient_norm)),
            ("phi_value", _g(self.phi_value)),
            ("phi_d2_sign", self.phi_d2_sign),
            ("rn_d1_sign", self.rn_d1_sign),
            ("rn_d2_sign", self.rn_d2_sign),
            ("residual", _g(self.residual)),
            ("positive", str(self.positive).lower()),
            ("nehari_gap", _g(self.nehari_gap)),
            ("h1_norm", _g(math.sqrt(gradient_energy(self.solution)))),
            ("max_abs", _g(self.solution.max_abs())),
            ("s0", _g(s.s0)),
            ("s1", _g(s.s1)),
            ("s2", _g(s.s2)),
        ]
        rows += [(f"diag_{k}", v if isinstance(v, str) else _g(v)) for k, v in sorted(self.diagnostics.items())]
        return "".join(f"{k}: {v}\n" for k, v in rows)


def _g(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.17g}"


def _sign(x, scale, rtol=SIGN_RTOL):
    if not math.isfinite(x):
        return "n/a"
    if abs(x) <= rtol * scale:
        return "0"
    return "+" if x > 0 else "-"


def _d2_scale(lam, mu, nt, ex):
    q, al, g = ex.q, ex.alpha, ex.gamma
    return nt.a + abs(lam) * (q - 1) * nt.b + abs(mu) * (al - 1) * nt.c + (g - 1) * nt.d


def classify_solution(u: DiscreteField, lam: float, mu: float, ex: Exponents,
                      tol: float = TOL_ROOT) -> SolveReport:
    """Evaluate every report field for a candidate field; no optimization.

    ``nehari_gap`` is ``|<energy_gradient(u), u>| / (1 + ‖u‖₁²)``.  Derivative
    signs are those of the fiber functions at ``t = 1``; values within a
    relative ``1e-9`` of their term magnitudes are reported as ``0``.
    """
    nt = norm_tuple(u, ex)
    q, al, g = ex.q, ex.alpha, ex.gamma
    gap = abs(float(energy_gradient(u, lam, mu, ex).values @ u.values)) / (1.0 + nt.a)
    d2 = float(phi_d2(1.0, lam, mu, nt, ex))
    rn_scale = ((2 - al) * (1 - al) * nt.a + abs(lam) * (q - al) * (q - al - 1) * nt.b
                + (g - al) * (g - al - 1) * nt.d) / nt.c
    rn1_scale = ((2 - al) * nt.a + abs(lam) * (al - q) * nt.b + (g - al) * nt.d) / nt.c
    try:
        roots = nehari_roots(lam, mu, nt, ex, tol) if lam > 0 else RootTriple()
    except DomainError:
        roots = RootTriple()
    return SolveReport(
        solution=u, branch=None, lam=lam, mu=mu,
        phi_value=energy(u, lam, mu, ex),
        phi_d2_sign=_sign(d2, _d2_scale(lam, mu, nt, ex)),
        rn_d1_sign=_sign(float(rayleigh_n_d1(1.0, lam, nt, ex)), rn1_scale),
        rn_d2_sign=_sign(float(rayleigh_n_d2(1.0, lam, nt, ex)), abs(rn_scale)),
        residual=pde_residual(u, lam, mu, ex),
        positive=bool(np.all(u.values > 0)),
        nehari_gap=gap,
        s_roots=roots,
    )


def _branch_root(branch, lam, mu, nt, ex, tol):
    """Fiber root for the branch, or a string naming why it is unavailable."""
    roots = nehari_roots(lam, mu, nt, ex, tol)
    if branch == 2:
        return roots.s2 if roots.s2 is not None else "no root beyond t_n_minus (mu >= mu_n_minus(u))"
    if roots.count < 3 or roots.s1 is None:
        return "fewer than three fiber roots (mu outside (mu_n_plus(u), mu_n_minus(u)))"
    guard = 10 * tol * roots.s1
    if roots.s1 - roots.s0 <= guard or roots.s2 - roots.s1 <= guard:
        return "middle root within 10*tol_root of a neighbour (band boundary)"
    return roots.s1


def _reduced_objective(branch, lam, mu, ex, tol, rejections):
    def objective(u):
        nt = norm_tuple(u, ex)
        s = _branch_root(branch, lam, mu, nt, ex, tol)
        if isinstance(s, str):
            rejections[s] = rejections.get(s, 0) + 1
            return None
        su = u.scaled(s)
        return energy(su, lam, mu, ex), energy_gradient(su, lam, mu, ex).scaled(s)
    return objective


def _solve(branch, lam, mu, grid, ex, opts, u0, tol):
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    opts = opts or DescentOptions()
    u0 = normalize_h1((u0 if u0 is not None else sine_bump(grid)).abs())
    s0 = _branch_root(branch, lam, mu, norm_tuple(u0, ex), ex, tol)
    if isinstance(s0, str):
        raise BandViolation(f"branch {branch} unavailable at the initial field: {s0}")
    rejections: dict = {}
    res = sphere_descent(_reduced_objective(branch, lam, mu, ex, tol, rejections), u0, opts)
    s = _branch_root(branch, lam, mu, norm_tuple(res.field, ex), ex, tol)
    sol = res.field.scaled(s)
    report = classify_solution(sol, lam, mu, ex, tol)
    report.branch = branch
    report.converged = res.converged
    report.iterations = res.iterations
    report.gradient_norm = res.gradient_norm
    if res.converged:
        report.status = "converged"
    elif res.stalled and rejections:
        report.status = "band-violation"
    else:
        report.status = "not-converged"
    report.diagnostics = {"rejected_steps": res.rejected_steps, "fiber_scale": s}
    for i, (reason, count) in enumerate(sorted(rejections.items())):
        report.diagnostics[f"rejection_{i}"] = f"{count} x {reason}"
    return report


def solve_branch1(lam: float, mu: float, grid: GridSpec, ex: Exponents,
                  opts: Optional[DescentOptions] = None, u0: Optional[DiscreteField] = None,
                  tol: float = TOL_ROOT) -> SolveReport:
    """Minimize the energy over fiber local-minimum points (middle root ``s1``).

    Iterates whose fiber has fewer than three roots, or whose middle root is
    about to merge with a neighbour, are rejected by the line search.  Raises
    ``BandViolation`` when the initial field already violates this.
    """
    return _solve(1, lam, mu, grid, ex, opts, u0, tol)


def solve_branch2(lam: float, mu: float, grid: GridSpec, ex: Exponents,
                  opts: Optional[DescentOptions] = None, u0: Optional[DiscreteField] = None,
                  tol: float = TOL_ROOT) -> SolveReport:
    """Minimize the energy over the outer fiber roots ``s2``.

    Requires ``gamma > 1 + alpha``.  The outer root exists whenever
    ``mu < mu_n_minus(u)``, so ``mu`` may be arbitrarily negative.
    """
    if not ex.strict_convexity_regime:
        raise UnsupportedRegimeError(
            f"branch 2 needs gamma > 1 + alpha (gamma={ex.gamma}, alpha={ex.alpha})")
    return _solve(2, lam, mu, grid, ex, opts, u0, tol)


# -- coercivity --------------------------------------------------------------

def _nehari_slice_level(u, radius, lam, mu, ex):
    """``Φ'(radius·u)/radius²`` for ``‖u‖₁ = 1``; zero on the Nehari slice."""
    q, al, g = ex.q, ex.alpha, ex.gamma
    return (1.0 + lam * radius**(q - 2) * lp_mass(u, q) - mu * radius**(al - 2) * lp_mass(u, al)
            - radius**(g - 2) * lp_mass(u, g))


def _random_direction(grid, rng, rough):
    x = grid.coordinates()
    v = sine_bump(grid).values.copy()
    for k in range(2, 5):
        coef = 0.5 * rng.standard_normal() / k
        v += coef * np.prod([np.sin(k * np.pi * xi / L) for xi, L in zip(x, grid.lengths)], axis=0).ravel()
    if rough:
        v += 2.0 * rng.random(grid.size) * np.abs(v).max()
    return normalize_h1(DiscreteField(np.abs(v) + 1e-12, grid))


def nehari_slice_samples(lam: float, mu: float, grid: GridSpec, ex: Exponents, radius: float,
                         n_samples: int, rng: np.random.Generator, max_draws: Optional[int] = None):
    """Random Nehari points ``w`` with ``‖w‖₁ = radius``.

    Each sample bisects along the segment between a smooth random direction
    and a rough one on which ``Φ'(radius·u)`` changes sign.  Draws without a
    sign change are discarded.
    """
    out = []
    max_draws = max_draws or 20 * n_samples
    for _ in range(max_draws):
        if len(out) == n_samples:
            break
        ua, ub = _random_direction(grid, rng, False), _random_direction(grid, rng, True)
        fa = _nehari_slice_level(ua, radius, lam, mu, ex)
        fb = _nehari_slice_level(ub, radius, lam, mu, ex)
        if fa * fb > 0:
            continue

        def blend(theta):
            return normalize_h1(DiscreteField((1 - theta) * ua.values + theta * ub.values, grid))

        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = _nehari_slice_level(blend(mid), radius, lam, mu, ex)
            if fm == 0:
                lo = hi = mid
                break
            if (fm < 0) == (fa < 0):
                lo = mid
            else:
                hi = mid
        out.append(blend(0.5 * (lo + hi)).scaled(radius))
    return out


@dataclass
class CoercivityRow:
    radius: float
    min_phi: Optional[float]
    n_points: int
    lower_bound: Optional[float]


def coercivity_probe(lam: float, mu: float, grid: GridSpec, ex: Exponents, radii: Sequence[float],
                     n_samples: int = 32, seed: int = 0, sobolev_c: Optional[float] = None
                     ) -> List[CoercivityRow]:
    """Minimum sampled energy on Nehari slices ``‖u‖₁ = radius``.

    ``lower_bound`` is ``((γ-2)/2γ) R² - μ⁺ C R^α`` with ``C`` the grid
    constant of ``∫|u|^α ≤ C ‖u‖₁^α``.
    """
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValidationError("radii must be positive and ascending")
    C = sobolev_c if sobolev_c is not None else sobolev_constant(grid, ex.alpha)
    rng = np.random.default_rng(seed)
    rows = []
    g, al = ex.gamma, ex.alpha
    for R in radii:
        pts = nehari_slice_samples(lam, mu, grid, ex, R, n_samples, rng)
        vals = [energy(w, lam, mu, ex) for w in pts]
        lb = (g - 2) / (2 * g) * R**2 - max(mu, 0.0) * C * R**al
        rows.append(CoercivityRow(R, min(vals) if vals else None, len(vals), lb))
    return rows


def sobolev_constant(grid: GridSpec, p: float, opts: Optional[DescentOptions] = None) -> float:
    """Numerical ``sup ∫|u|^p / ‖u‖₁^p`` over the grid space."""
    def objective(u):
        a = gradient_energy(u)
        c = lp_mass(u, p)
        m = u.grid.measure
        val = -c / a**(p / 2)
        grad = -(p * m * signed_power(u.values, p) - p * c / a * m * (laplacian(u.grid) @ u.values)) / a**(p / 2)
        return val, u.with_values(grad)
    res = sphere_descent(objective, sine_bump(grid), opts or DescentOptions(tol_opt=1e-10))
    return -res.value
