"""Scalar fibering functions for the two-parameter problem

    -Δu = |u|^{γ-2}u + μ|u|^{α-2}u - λ|u|^{q-2}u,   u = 0 on ∂Ω.

Everything here depends on a fixed field ``u`` only through its four
functionals ``NormTuple(a, b, c, d)``::

    a = ∫|∇u|²,  b = ∫|u|^q,  c = ∫|u|^α,  d = ∫|u|^γ

and on the exponents.  All functions are pure and accept numpy arrays for
the fiber variable ``t`` so that oracles can evaluate them on dense grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import BracketError, DomainError, UnsupportedRegimeError, ValidationError

TOL_ROOT = 1e-12
DEGENERATE_LAMBDA_RTOL = 1e-10
KINDS = ("e", "n")


@dataclass(frozen=True)
class Exponents:
    """Growth exponents ``1 < q < alpha < 2 < gamma < 2*`` in dimension ``dim``."""

    q: float
    alpha: float
    gamma: float
    dim: int = 1

    def __post_init__(self):
        q, al, g = self.q, self.alpha, self.gamma
        if not (isinstance(self.dim, (int, np.integer)) and self.dim >= 1):
            raise ValidationError(f"dim must be a positive integer, got {self.dim!r}")
        for name, lhs, rhs in (("1 < q", 1.0, q), ("q < alpha", q, al),
                               ("alpha < 2", al, 2.0), ("2 < gamma", 2.0, g)):
            if not lhs < rhs:
                raise ValidationError(f"exponent order violated: {name} (q={q}, alpha={al}, gamma={g})")
        if not g < self.critical_exponent:
            raise ValidationError(
                f"exponent order violated: gamma < 2* = {self.critical_exponent} (gamma={g})")

    @property
    def critical_exponent(self) -> float:
        n = self.dim
        return math.inf if n <= 2 else 2.0 * n / (n - 2)

    @property
    def strict_convexity_regime(self) -> bool:
        return self.gamma > 1.0 + self.alpha


@dataclass(frozen=True)
class NormTuple:
    """Gradient energy and the three Lebesgue masses of a fixed nonzero field."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"norm tuple entry {name} must be positive and finite, got {v!r}")

    def scaled(self, k: float, ex: Exponents) -> "NormTuple":
        """Norm tuple of ``k*u``."""
        k = abs(k)
        return NormTuple(k**2 * self.a, k**ex.q * self.b, k**ex.alpha * self.c, k**ex.gamma * self.d)

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class FiberConstants:
    """Constants of the closed forms for ``t_star`` and ``lambda_star``.

    ``c_e`` uses the exponent ``(2-q)/(gamma-2)`` on the factor ``(2-q)``, the
    only choice that agrees with evaluating ``lambda_fiber_e`` at its maximizer.
    """

    C_e: float
    C_n: float
    c_e: float
    c_n: float

    @classmethod
    def from_exponents(cls, ex: Exponents) -> "FiberConstants":
        q, al, g = ex.q, ex.alpha, ex.gamma
        C_e = g * (2 - al) * (2 - q) / (2 * (g - al) * (g - q))
        C_n = (2 - al) * (2 - q) / ((g - al) * (g - q))
        r = (2 - q) / (g - 2)
        s = (g - q) / (g - 2)
        c_e = (q * g**r / 2**s) * ((2 - al)**s * (2 - q)**r * (g - 2)) / (
            (al - q) * (g - al)**r * (g - q)**s)
        c_n = lambda_star_ratio(ex) * c_e
        return cls(C_e, C_n, c_e, c_n)


def lambda_star_ratio(ex: Exponents) -> float:
    """Exact ratio ``lambda_star_n(u) / lambda_star_e(u)``, independent of ``u``."""
    q, g = ex.q, ex.gamma
    return 2.0**((g - q) / (g - 2)) / (q * g**((2 - q) / (g - 2)))


class CriticalPair(NamedTuple):
    t_plus: float
    t_minus: float
    degenerate: bool


class MuQuotients(NamedTuple):
    """Quotient values at the fiber critical points; ``None`` where undefined."""

    e_plus: Optional[float]
    e_minus: Optional[float]
    n_plus: Optional[float]
    n_minus: Optional[float]

    def ordered(self) -> bool:
        if None in self:
            return False
        return self.n_plus <= self.e_plus < self.e_minus < self.n_minus


@dataclass(frozen=True)
class RootTriple:
    """Roots of ``rayleigh_n(t) = mu`` labelled by position along the fiber.

    ``s0`` lies in ``(0, t_n_plus)``, ``s1`` in ``(t_n_plus, t_n_minus)`` and
    ``s2`` beyond ``t_n_minus``.  A double root at ``t_n_plus`` sets
    ``merged_low`` with ``s0 == s1``; one at ``t_n_minus`` sets ``merged_high``
    with ``s1 == s2``.  For a monotone fiber the single root is stored as ``s0``
    or ``s2`` according to its side of ``t_star('n')``.
    """

    s0: Optional[float] = None
    s1: Optional[float] = None
    s2: Optional[float] = None
    merged_low: bool = False
    merged_high: bool = False

    @property
    def roots(self):
        out = []
        for s in (self.s0, self.s1, self.s2):
            if s is not None and (not out or s != out[-1]):
                out.append(s)
        return out

    @property
    def count(self) -> int:
        return len(self.roots)


@dataclass(frozen=True)
class FiberAnalysis:
    t_star_e: float
    t_star_n: float
    lambda_star_e_u: float
    lambda_star_n_u: float
    crit_e: Optional[CriticalPair]
    crit_n: Optional[CriticalPair]
    mu: MuQuotients
    inflection_r: Optional[float]

    @property
    def mu_e_plus(self):
        return self.mu.e_plus

    @property
    def mu_e_minus(self):
        return self.mu.e_minus

    @property
    def mu_n_plus(self):
        return self.mu.n_plus

    @property
    def mu_n_minus(self):
        return self.mu.n_minus


def _positive(t):
    if isinstance(t, float):
        if not t > 0:
            raise DomainError("fiber variable t must be positive")
        return t
    if np.any(np.asarray(t) <= 0):
        raise DomainError("fiber variable t must be positive")
    return t


def _nonnegative(t):
    if isinstance(t, float):
        if not t >= 0:
            raise DomainError("fiber variable t must be nonnegative")
        return t
    if np.any(np.asarray(t) < 0):
        raise DomainError("fiber variable t must be nonnegative")
    return t


# -- energy along the fiber -------------------------------------------------

def phi_fiber(t, lam, mu, nt: NormTuple, ex: Exponents):
    """Energy ``Φ_{λ,μ}(t u)``."""
    t = _nonnegative(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return (0.5 * t**2 * nt.a + lam * t**q / q * nt.b
            - mu * t**al / al * nt.c - t**g / g * nt.d)


def phi_d1(t, lam, mu, nt: NormTuple, ex: Exponents):
    """First t-derivative of ``phi_fiber``."""
    t = _nonnegative(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return t * nt.a + lam * t**(q - 1) * nt.b - mu * t**(al - 1) * nt.c - t**(g - 1) * nt.d


def phi_d2(t, lam, mu, nt: NormTuple, ex: Exponents):
    """Second t-derivative of ``phi_fiber``."""
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return (nt.a + lam * (q - 1) * t**(q - 2) * nt.b
            - mu * (al - 1) * t**(al - 2) * nt.c - (g - 1) * t**(g - 2) * nt.d)


# -- Rayleigh quotients in the parameter mu ----------------------------------

def rayleigh_n(t, lam, nt: NormTuple, ex: Exponents):
    """The ``mu`` solving ``phi_d1(t) = 0``."""
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return (t**(2 - al) * nt.a + lam * t**(q - al) * nt.b - t**(g - al) * nt.d) / nt.c


def rayleigh_n_d1(t, lam, nt: NormTuple, ex: Exponents):
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return ((2 - al) * t**(1 - al) * nt.a + (q - al) * lam * t**(q - al - 1) * nt.b
            - (g - al) * t**(g - al - 1) * nt.d) / nt.c


def rayleigh_n_d2(t, lam, nt: NormTuple, ex: Exponents):
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return ((2 - al) * (1 - al) * t**(-al) * nt.a
            + (q - al) * (q - al - 1) * lam * t**(q - al - 2) * nt.b
            - (g - al) * (g - al - 1) * t**(g - al - 2) * nt.d) / nt.c


def rayleigh_e(t, lam, nt: NormTuple, ex: Exponents):
    """The ``mu`` solving ``phi_fiber(t) = 0``."""
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return al / nt.c * (0.5 * t**(2 - al) * nt.a + lam / q * t**(q - al) * nt.b
                        - t**(g - al) / g * nt.d)


def rayleigh_e_d1(t, lam, nt: NormTuple, ex: Exponents):
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return al / nt.c * (0.5 * (2 - al) * t**(1 - al) * nt.a
                        + (q - al) / q * lam * t**(q - al - 1) * nt.b
                        - (g - al) / g * t**(g - al - 1) * nt.d)


def rayleigh_e_d2(t, lam, nt: NormTuple, ex: Exponents):
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return al / nt.c * (0.5 * (2 - al) * (1 - al) * t**(-al) * nt.a
                        + (q - al) * (q - al - 1) / q * lam * t**(q - al - 2) * nt.b
                        - (g - al) * (g - al - 1) / g * t**(g - al - 2) * nt.d)


# -- Rayleigh quotients in the parameter lambda ------------------------------

def lambda_fiber_n(t, nt: NormTuple, ex: Exponents):
    """The ``lambda`` solving ``rayleigh_n_d1(t) = 0``."""
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return ((2 - al) * t**(2 - q) * nt.a - (g - al) * t**(g - q) * nt.d) / ((al - q) * nt.b)


def lambda_fiber_e(t, nt: NormTuple, ex: Exponents):
    """The ``lambda`` solving ``rayleigh_e_d1(t) = 0``."""
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return q * (0.5 * (2 - al) * t**(2 - q) * nt.a
                - (g - al) / g * t**(g - q) * nt.d) / ((al - q) * nt.b)


def lambda_fiber_n_d1(t, nt: NormTuple, ex: Exponents):
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return ((2 - al) * (2 - q) * t**(1 - q) * nt.a
            - (g - al) * (g - q) * t**(g - q - 1) * nt.d) / ((al - q) * nt.b)


def lambda_fiber_e_d1(t, nt: NormTuple, ex: Exponents):
    t = _positive(t)
    q, al, g = ex.q, ex.alpha, ex.gamma
    return q * (0.5 * (2 - al) * (2 - q) * t**(1 - q) * nt.a
                - (g - al) * (g - q) / g * t**(g - q - 1) * nt.d) / ((al - q) * nt.b)


def lambda_fiber(kind, t, nt, ex):
    return _by_kind(kind, lambda_fiber_e, lambda_fiber_n)(t, nt, ex)


def lambda_fiber_d1(kind, t, nt, ex):
    return _by_kind(kind, lambda_fiber_e_d1, lambda_fiber_n_d1)(t, nt, ex)


def _by_kind(kind, fe, fn):
    if kind == "e":
        return fe
    if kind == "n":
        return fn
    raise ValidationError(f"kind must be 'e' or 'n', got {kind!r}")


def t_star(kind: str, nt: NormTuple, ex: Exponents) -> float:
    """Maximizer of ``lambda_fiber(kind, ., nt)``."""
    const = FiberConstants.from_exponents(ex)
    C = _by_kind(kind, const.C_e, const.C_n)
    return (C * nt.a / nt.d) ** (1.0 / (ex.gamma - 2))


def lambda_star_of_u(kind: str, nt: NormTuple, ex: Exponents) -> float:
    """``sup_t lambda_fiber(kind, t, nt)``, evaluated at the maximizer."""
    return float(lambda_fiber(kind, t_star(kind, nt, ex), nt, ex))


def lambda_star_closed_form(kind: str, nt: NormTuple, ex: Exponents, constants=None) -> float:
    const = constants or FiberConstants.from_exponents(ex)
    c = _by_kind(kind, const.c_e, const.c_n)
    q, g = ex.q, ex.gamma
    return c * nt.a**((g - q) / (g - 2)) / (nt.b * nt.d**((2 - q) / (g - 2)))


# -- root finding ------------------------------------------------------------

def bisect_root(f, lo, hi, tol=TOL_ROOT, df=None, max_iter=400):
    """Root of ``f`` in ``[lo, hi]`` by bisection plus one safeguarded Newton step.

    Iterates until ``hi - lo <= tol * hi``.  Midpoints are geometric while the
    bracket spans more than a factor of four, so tiny roots are found quickly.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError("root not bracketed", {"lo": lo, "hi": hi, "f_lo": flo, "f_hi": fhi})
    for _ in range(max_iter):
        if hi - lo <= tol * hi:
            break
        mid = math.sqrt(lo * hi) if hi > 4 * lo else 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    t = lo if abs(flo) < abs(fhi) else hi
    ft = flo if t == lo else fhi
    if df is not None:
        slope = df(t)
        if slope != 0 and math.isfinite(slope):
            cand = t - ft / slope
            if lo <= cand <= hi:
                fc = f(cand)
                if abs(fc) <= abs(ft):
                    t = cand
    return t


def critical_pair(kind: str, lam: float, nt: NormTuple, ex: Exponents,
                  tol: float = TOL_ROOT) -> Optional[CriticalPair]:
    """Local min / local max of the ``kind`` quotient fiber at parameter ``lam``.

    Returns ``None`` when ``lam`` exceeds ``lambda_star_of_u`` (no critical
    points), and a degenerate pair at ``t_star`` in the tangency case.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    ts = t_star(kind, nt, ex)
    lstar = float(lambda_fiber(kind, ts, nt, ex))
    if abs(lam - lstar) <= DEGENERATE_LAMBDA_RTOL * lstar:
        return CriticalPair(ts, ts, True)
    if lam > lstar:
        return None

    def g(t):
        return float(lambda_fiber(kind, t, nt, ex)) - lam

    def dg(t):
        return float(lambda_fiber_d1(kind, t, nt, ex))

    lo = ts
    for _ in range(2100):
        lo *= 0.5
        if lo == 0.0:
            raise BracketError("left bracket underflow", {"kind": kind, "lam": lam, "t_star": ts})
        if g(lo) + lam < 0.5 * lam:
            break
    else:
        raise BracketError("left bracket not found", {"kind": kind, "lam": lam, "t_star": ts, "lo": lo})
    hi = ts
    for _ in range(200):
        hi *= 2.0
        if g(hi) < 0:
            break
    else:
        raise BracketError("right bracket not found", {"kind": kind, "lam": lam, "t_star": ts, "hi": hi})
    t_plus = bisect_root(g, lo, ts, tol, dg)
    t_minus = bisect_root(g, ts, hi, tol, dg)
    degenerate = abs(t_minus - t_plus) <= tol * ts
    return CriticalPair(t_plus, t_minus, degenerate)


def mu_quotients(lam: float, nt: NormTuple, ex: Exponents, tol: float = TOL_ROOT) -> MuQuotients:
    """Quotient values at their own fiber critical points, absent where undefined."""
    pe = critical_pair("e", lam, nt, ex, tol)
    pn = critical_pair("n", lam, nt, ex, tol)
    e_plus = e_minus = n_plus = n_minus = None
    if pe is not None:
        e_plus = float(rayleigh_e(pe.t_plus, lam, nt, ex))
        e_minus = float(rayleigh_e(pe.t_minus, lam, nt, ex))
    if pn is not None:
        n_plus = float(rayleigh_n(pn.t_plus, lam, nt, ex))
        n_minus = float(rayleigh_n(pn.t_minus, lam, nt, ex))
    return MuQuotients(e_plus, e_minus, n_plus, n_minus)


def _level_tolerance(lam, nt, ex, t):
    q, al, g = ex.q, ex.alpha, ex.gamma
    scale = (t**(2 - al) * nt.a + lam * t**(q - al) * nt.b + t**(g - al) * nt.d) / nt.c
    return 1e-12 * scale


def nehari_roots(lam: float, mu: float, nt: NormTuple, ex: Exponents,
                 tol: float = TOL_ROOT) -> RootTriple:
    """Roots of ``rayleigh_n(t) = mu``; the root count is part of the result."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")

    def f(t):
        return float(rayleigh_n(t, lam, nt, ex)) - mu

    def df(t):
        return float(rayleigh_n_d1(t, lam, nt, ex))

    def left_root(t_right):
        lo = t_right
        for _ in range(2100):
            lo *= 0.5
            if lo == 0.0:
                raise BracketError("left bracket underflow", {"lam": lam, "mu": mu, "t": t_right})
            if f(lo) > 0:
                return bisect_root(f, lo, t_right, tol, df)
        raise BracketError("left bracket not found", {"lam": lam, "mu": mu, "t": t_right})

    def right_root(t_left):
        hi = t_left
        for _ in range(200):
            hi *= 2.0
            if f(hi) < 0:
                return bisect_root(f, t_left, hi, tol, df)
        raise BracketError("right bracket not found", {"lam": lam, "mu": mu, "t": t_left, "hi": hi})

    pair = critical_pair("n", lam, nt, ex, tol)
    if pair is None or pair.degenerate:
        # monotone fiber: exactly one root
        tn = t_star("n", nt, ex)
        if f(tn) == 0:
            root = tn
        elif f(tn) > 0:
            root = right_root(tn)
        else:
            root = left_root(tn)
        return RootTriple(s0=root) if root < tn else RootTriple(s2=root)

    tp, tm = pair.t_plus, pair.t_minus
    fp, fm = f(tp), f(tm)
    if abs(fp) <= _level_tolerance(lam, nt, ex, tp):
        return RootTriple(s0=tp, s1=tp, s2=right_root(tm), merged_low=True)
    if abs(fm) <= _level_tolerance(lam, nt, ex, tm):
        return RootTriple(s0=left_root(tp), s1=tm, s2=tm, merged_high=True)
    if fp > 0:
        # mu below the local minimum: only the tail root
        return RootTriple(s2=right_root(tm))
    if fm < 0:
        # mu above the local maximum: only the small root
        return RootTriple(s0=left_root(tp))
    s1 = bisect_root(f, tp, tm, tol, df)
    return RootTriple(s0=left_root(tp), s1=s1, s2=right_root(tm))


def inflection_root(lam: float, nt: NormTuple, ex: Exponents, tol: float = TOL_ROOT) -> float:
    """Unique sign change of ``rayleigh_n_d2`` inside ``(t_n_plus, t_n_minus)``."""
    if not ex.strict_convexity_regime:
        raise UnsupportedRegimeError(
            f"inflection root needs gamma > 1 + alpha (gamma={ex.gamma}, alpha={ex.alpha})")
    pair = critical_pair("n", lam, nt, ex, tol)
    if pair is None or pair.degenerate:
        raise DomainError("inflection root needs 0 < lambda < lambda_star_of_u('n')")
    q, al, g = ex.q, ex.alpha, ex.gamma

    # t^alpha * c * rayleigh_n_d2: same sign, strictly decreasing in this regime
    def h(t):
        return ((2 - al) * (1 - al) * nt.a + (q - al) * (q - al - 1) * lam * t**(q - 2) * nt.b
                - (g - al) * (g - al - 1) * t**(g - 2) * nt.d)

    def dh(t):
        return ((q - al) * (q - al - 1) * (q - 2) * lam * t**(q - 3) * nt.b
                - (g - al) * (g - al - 1) * (g - 2) * t**(g - 3) * nt.d)

    return bisect_root(h, pair.t_plus, pair.t_minus, tol, dh)


def analyze_fiber(lam: float, nt: NormTuple, ex: Exponents, tol: float = TOL_ROOT) -> FiberAnalysis:
    crit_e = critical_pair("e", lam, nt, ex, tol)
    crit_n = critical_pair("n", lam, nt, ex, tol)
    r = None
    if ex.strict_convexity_regime and crit_n is not None and not crit_n.degenerate:
        r = inflection_root(lam, nt, ex, tol)
    return FiberAnalysis(
        t_star_e=t_star("e", nt, ex),
        t_star_n=t_star("n", nt, ex),
        lambda_star_e_u=lambda_star_of_u("e", nt, ex),
        lambda_star_n_u=lambda_star_of_u("n", nt, ex),
        crit_e=crit_e,
        crit_n=crit_n,
        mu=mu_quotients(lam, nt, ex, tol),
        inflection_r=r,
    )


# -- extremal quotients as functions of the norm tuple ------------------------

QUOTIENT_KINDS = ("lambda_star_e", "lambda_star_n", "mu_e_plus", "mu_e_minus", "mu_n_plus", "mu_n_minus")


def quotient_value_and_partials(which: str, lam: float, nt: NormTuple, ex: Exponents,
                                tol: float = TOL_ROOT):
    """Value of an extremal quotient and its partials in ``(a, b, c, d)``.

    The quotient is a fiber function evaluated at one of its own critical
    points, so the partials are those of the fiber function at fixed ``t``.
    Returns ``None`` when the critical point does not exist.
    """
    q, al, g = ex.q, ex.alpha, ex.gamma
    a, b, c, d = nt.as_tuple()
    if which.startswith("lambda_star_"):
        kind = which[-1]
        t = t_star(kind, nt, ex)
        val = float(lambda_fiber(kind, t, nt, ex))
        k = q / 2 if kind == "e" else 1.0
        kd = q / g if kind == "e" else 1.0
        da = k * (2 - al) * t**(2 - q) / ((al - q) * b)
        dd = -kd * (g - al) * t**(g - q) / ((al - q) * b)
        return val, np.array([da, -val / b, 0.0, dd]), t
    if which not in QUOTIENT_KINDS:
        raise ValidationError(f"unknown quotient {which!r}")
    _, kind, sign = which.split("_")
    pair = critical_pair(kind, lam, nt, ex, tol)
    if pair is None:
        return None
    t = pair.t_plus if sign == "plus" else pair.t_minus
    if kind == "e":
        val = float(rayleigh_e(t, lam, nt, ex))
        grads = np.array([al * t**(2 - al) / (2 * c), al * lam * t**(q - al) / (q * c),
                          -val / c, -al * t**(g - al) / (g * c)])
    else:
        val = float(rayleigh_n(t, lam, nt, ex))
        grads = np.array([t**(2 - al) / c, lam * t**(q - al) / c, -val / c, -t**(g - al) / c])
    return val, grads, t


def quotient_value(which: str, lam: float, nt: NormTuple, ex: Exponents, tol: float = TOL_ROOT):
    res = quotient_value_and_partials(which, lam, nt, ex, tol)
    return None if res is None else res[0]
