"""Brute-force verifiers: dense fiber scans, finite-difference order checks
and randomized identity suites over the scalar fiber functions.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .fibering import (
    Exponents, FiberConstants, NormTuple, critical_pair, inflection_root, lambda_fiber,
    lambda_star_closed_form, lambda_star_of_u, mu_quotients, nehari_roots, phi_d2,
    rayleigh_e, rayleigh_e_d2, rayleigh_n, rayleigh_n_d1, t_star,
)

WORKERS_ENV = "NGRAYLEIGH_WORKERS"


# -- dense scans -------------------------------------------------------------

def _scan_grid(t_lo, t_hi, n_samples, spacing):
    if not t_lo > 0 or not t_hi > t_lo:
        raise ValidationError(f"need 0 < t_lo < t_hi, got ({t_lo}, {t_hi})")
    if n_samples < 1000:
        raise ValidationError(f"n_samples must be at least 1000, got {n_samples}")
    if spacing == "log":
        return np.geomspace(t_lo, t_hi, n_samples)
    if spacing == "linear":
        return np.linspace(t_lo, t_hi, n_samples)
    raise ValidationError(f"spacing must be 'log' or 'linear', got {spacing!r}")


def grid_scan_roots(f: Callable, t_lo: float, t_hi: float, n_samples: int = 10**6,
                    spacing: str = "log"):
    """Brackets ``(t_i, t_{i+1})`` of consecutive samples where ``f`` changes sign.

    ``f`` must accept an array.  A sample where ``f`` is exactly zero yields
    the degenerate bracket ``(t_i, t_i)``.
    """
    t = _scan_grid(t_lo, t_hi, n_samples, spacing)
    s = np.sign(np.asarray(f(t), dtype=float))
    out = [(float(t[i]), float(t[i])) for i in np.flatnonzero(s == 0)]
    change = np.flatnonzero(s[:-1] * s[1:] < 0)
    out += [(float(t[i]), float(t[i + 1])) for i in change]
    return sorted(out)


@dataclass(frozen=True)
class ScanRoot:
    lo: float
    hi: float
    multiplicity: int


def scan_roots(f: Callable, t_lo: float, t_hi: float, n_samples: int = 10**6,
               atol: float = 0.0, spacing: str = "log") -> List[ScanRoot]:
    """Distinct roots on a dense grid, including tangential touches.

    Runs of samples with ``|f| <= atol`` are merged into one cluster.  A
    cluster across which the sign flips is a simple root, otherwise a double
    root.  Outside clusters every sign change is a simple root.
    """
    t = _scan_grid(t_lo, t_hi, n_samples, spacing)
    v = np.asarray(f(t), dtype=float)
    idx = np.flatnonzero(np.abs(v) > atol)
    if idx.size == 0:
        return [ScanRoot(float(t[0]), float(t[-1]), 1)]
    sg = np.sign(v[idx])
    roots = []
    if idx[0] > 0:
        roots.append(ScanRoot(float(t[0]), float(t[idx[0]]), 1))
    gap = np.diff(idx) > 1
    flip = sg[:-1] != sg[1:]
    for k in np.flatnonzero(gap | flip):
        mult = 2 if gap[k] and not flip[k] else 1
        roots.append(ScanRoot(float(t[idx[k]]), float(t[idx[k + 1]]), mult))
    if idx[-1] < len(t) - 1:
        roots.append(ScanRoot(float(t[idx[-1]]), float(t[-1]), 1))
    return roots


def nehari_scan_range(lam, mu, nt: NormTuple, ex: Exponents):
    """Interval guaranteed to contain every root of ``rayleigh_n(t) = mu``.

    Below ``t_lo`` the absorption term alone beats the other terms, beyond
    ``t_hi`` the level function is increasing and already past ``mu``.
    """
    q, al, g = ex.q, ex.alpha, ex.gamma
    a, b, c, d = nt.as_tuple()
    t_lo = 1.0
    while lam * t_lo**(q - al) * b <= c * max(mu, 0.0) + t_lo**(g - al) * d:
        t_lo *= 0.5
    t_hi = max(1.0, ((2 - al) * a / ((g - al) * d)) ** (1 / (g - 2)))
    while t_hi**(g - al) * d - t_hi**(2 - al) * a - lam * t_hi**(q - al) * b <= mu * c:
        t_hi *= 2.0
    return t_lo, t_hi


# -- finite differences ------------------------------------------------------

def fd_check(f: Callable, t: float, h_sequence: Sequence[float], df: Callable,
             floor_factor: float = 1e3) -> Optional[float]:
    """Observed order of the central-difference error against ``df(t)``.

    Returns the median order over consecutive step pairs whose errors sit
    above the round-off floor, or ``None`` when no pair qualifies (e.g. the
    derivative is reproduced to round-off at every step).
    """
    exact = float(df(t))
    fscale = abs(float(f(t))) + abs(exact) * max(h_sequence)
    eps = np.finfo(float).eps
    errs = []
    for h in h_sequence:
        approx = (float(f(t + h)) - float(f(t - h))) / (2 * h)
        errs.append((h, abs(approx - exact), floor_factor * eps * fscale / h))
    orders = []
    for (h1, e1, _), (h2, e2, fl2) in zip(errs, errs[1:]):
        if e2 > fl2 and e1 > 0:
            orders.append(math.log(e1 / e2) / math.log(h1 / h2))
    return float(np.median(orders)) if orders else None


def default_steps(t: float, count: int = 6, first: float = 2.0**-4):
    return [t * first * 2.0**-k for k in range(count)]


# -- samplers ----------------------------------------------------------------

Q_RANGE = (1.05, 1.95)
GAMMA_RANGE = (2.5, 6.0)
MIN_GAP = 0.05


def sample_exponents(rng: np.random.Generator, convex: bool = False, dim: int = 1) -> Exponents:
    """Uniform draw from ``1.05 <= q < alpha <= 1.95``, ``2.5 <= gamma <= 6``.

    ``q`` and ``alpha`` are kept at least 0.05 apart.  With ``convex`` the
    draw also satisfies ``gamma >= 1 + alpha + 0.05``.
    """
    lo, hi = Q_RANGE
    while True:
        q, al = np.sort(rng.uniform(lo, hi, 2))
        if al - q >= MIN_GAP:
            break
    glo = max(GAMMA_RANGE[0], 1 + al + MIN_GAP) if convex else GAMMA_RANGE[0]
    g = rng.uniform(glo, GAMMA_RANGE[1])
    return Exponents(float(q), float(al), float(g), dim)


def sample_norm_tuple(rng: np.random.Generator, lo: float = 1e-2, hi: float = 1e2) -> NormTuple:
    """Log-uniform components."""
    return NormTuple(*(float(v) for v in np.exp(rng.uniform(math.log(lo), math.log(hi), 4))))


def sample_lambda(rng: np.random.Generator, nt: NormTuple, ex: Exponents, frac: float = 0.95) -> float:
    """Uniform on ``(0, frac * lambda_star_of_u('e'))``."""
    return float(frac * lambda_star_of_u("e", nt, ex) * (1.0 - rng.random()))


def case_rngs(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ValidationError(f"{WORKERS_ENV} must be positive, got {n}")
    return n


def parallel_map(fn, items, workers: Optional[int] = None):
    """Order-preserving map; runs in-process when one worker is requested."""
    workers = worker_count() if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


# -- reports -----------------------------------------------------------------

@dataclass(frozen=True)
class Failure:
    case: int
    descriptor: str
    relation: str
    observed: str


@dataclass
class VerifyReport:
    case_count: int
    seed: int
    failures: List[Failure] = field(default_factory=list)
    checks: int = 0
    name: str = "lemma-suite"

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_text(self) -> str:
        lines = [
            f"suite: {self.name}",
            f"seed: {self.seed}",
            f"cases: {self.case_count}",
            f"checks: {self.checks}",
            f"failures: {len(self.failures)}",
            f"result: {'pass' if self.passed else 'fail'}",
        ]
        lines += [f"  case {f.case}: {f.relation} | {f.descriptor} | {f.observed}" for f in self.failures]
        return "\n".join(lines) + "\n"

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("case,descriptor,relation,observed\n")
            for f in self.failures:
                cells = [str(f.case)] + [_csv_cell(x) for x in (f.descriptor, f.relation, f.observed)]
                fh.write(",".join(cells) + "\n")


def _csv_cell(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def _describe(nt, ex, lam, mu=None):
    s = (f"ex=({ex.q:.17g},{ex.alpha:.17g},{ex.gamma:.17g}) "
         f"nt=({nt.a:.17g},{nt.b:.17g},{nt.c:.17g},{nt.d:.17g}) lambda={lam:.17g}")
    return s if mu is None else s + f" mu={mu:.17g}"


def _merge(reports_per_case, seed, name):
    rep = VerifyReport(case_count=len(reports_per_case), seed=seed, name=name)
    for i, (checks, fails) in enumerate(reports_per_case):
        rep.checks += checks
        rep.failures += [Failure(i, d, r, o) for d, r, o in fails]
    return rep


# -- identity suite ----------------------------------------------------------

def exact_lambda_ratio(ex: Exponents) -> float:
    """``lambda_star_n / lambda_star_e`` written directly in the exponents."""
    q, g = ex.q, ex.gamma
    return 2.0**((g - q) / (g - 2)) / (q * g**((2 - q) / (g - 2)))


def _sign(x, scale, rtol=1e-9):
    if abs(x) <= rtol * scale:
        return 0
    return 1 if x > 0 else -1


def check_case(nt: NormTuple, ex: Exponents, lam: float, constants: Optional[FiberConstants] = None,
               rng: Optional[np.random.Generator] = None, level_points: int = 8):
    """All scalar identities for one ``(nt, ex, lam)``; returns (checks, failures)."""
    q, al, g = ex.q, ex.alpha, ex.gamma
    a, b, c, d = nt.as_tuple()
    desc = _describe(nt, ex, lam)
    fails = []
    checks = 0

    def check(ok, relation, observed):
        nonlocal checks
        checks += 1
        if not ok:
            fails.append((desc, relation, observed))

    # extremal-lambda ratio
    le = lambda_star_closed_form("e", nt, ex, constants)
    ln = lambda_star_closed_form("n", nt, ex, constants)
    ratio = exact_lambda_ratio(ex)
    check(le < ln, "lambda_star_e(u) < lambda_star_n(u)", f"{le:.17g} vs {ln:.17g}")
    check(abs(ln / le - ratio) <= 1e-12 * ratio, "lambda_star_n/lambda_star_e = exact ratio",
          f"{ln / le:.17g} vs {ratio:.17g}")
    for kind, closed in (("e", le), ("n", ln)):
        sup = lambda_star_of_u(kind, nt, ex)
        check(abs(closed - sup) <= 1e-12 * sup, f"closed form lambda_star_{kind}(u) = sup of fiber",
              f"{closed:.17g} vs {sup:.17g}")

    te = t_star("e", nt, ex)
    pe = critical_pair("e", lam, nt, ex)
    pn = critical_pair("n", lam, nt, ex)
    if pe is None or pn is None:
        check(False, "critical pairs exist below lambda_star_e(u)", f"e={pe} n={pn}")
        return checks, fails

    chain = [pn.t_plus, pe.t_plus, te, pn.t_minus, pe.t_minus]
    check(all(x < y for x, y in zip(chain, chain[1:])), "t_n+ < t_e+ < t_e < t_n- < t_e-",
          " ".join(f"{x:.17g}" for x in chain))

    # quotient fibers meet exactly at the critical points of the e-quotient
    for label, t in (("t_e+", pe.t_plus), ("t_e-", pe.t_minus)):
        re, rn = float(rayleigh_e(t, lam, nt, ex)), float(rayleigh_n(t, lam, nt, ex))
        scale = (t**(2 - al) * a + lam * t**(q - al) * b + t**(g - al) * d) / c
        check(abs(re - rn) <= 1e-10 * scale, f"R_e = R_n at {label}", f"{re:.17g} vs {rn:.17g}")

    mq = mu_quotients(lam, nt, ex)
    check(mq.n_plus <= mq.e_plus < mq.e_minus < mq.n_minus, "mu_n+ <= mu_e+ < mu_e- < mu_n-",
          f"{mq.n_plus:.17g} {mq.e_plus:.17g} {mq.e_minus:.17g} {mq.n_minus:.17g}")

    # small-t limit of the lambda fibers
    ts = 1e-6 * te
    r = float(lambda_fiber("e", ts, nt, ex)) / float(lambda_fiber("n", ts, nt, ex))
    check(abs(r / (q / 2) - 1) <= 1e-3, "Lambda_e/Lambda_n -> q/2 as t -> 0", f"{r:.17g} vs {q / 2:.17g}")

    # derivative of R_n along its own level set equals the energy curvature
    rng = rng or np.random.default_rng(0)
    lo, hi = math.log(pn.t_plus / 10), math.log(10 * pe.t_minus)
    pts = [pn.t_plus, pe.t_plus, te, pn.t_minus, pe.t_minus] + list(np.exp(rng.uniform(lo, hi, level_points)))
    for t in pts:
        nu = float(rayleigh_n(t, lam, nt, ex))
        lhs = float(rayleigh_n_d1(t, lam, nt, ex)) * t**(al - 1) * c
        rhs = float(phi_d2(t, lam, nu, nt, ex))
        scale = a + lam * (q - 1) * t**(q - 2) * b + abs(nu) * (al - 1) * t**(al - 2) * c + (g - 1) * t**(g - 2) * d
        check(abs(lhs - rhs) <= 1e-10 * scale, "t^(alpha-1) c R_n' = Phi'' on the level set",
              f"t={t:.17g}: {lhs:.17g} vs {rhs:.17g}")
        sl, sr = _sign(lhs, scale), _sign(rhs, scale)
        if sl and sr:
            check(sl == sr, "sign R_n' = sign Phi'' on the level set", f"t={t:.17g}: {sl} vs {sr}")

    # curvature of R_e at its critical points matches the energy curvature
    for label, t, expected in (("t_e+", pe.t_plus, 1), ("t_e-", pe.t_minus, -1)):
        nu = float(rayleigh_e(t, lam, nt, ex))
        r2 = float(rayleigh_e_d2(t, lam, nt, ex))
        p2 = float(phi_d2(t, lam, nu, nt, ex))
        check(np.sign(r2) == np.sign(p2) == expected, f"sign R_e'' = sign Phi'' at {label}",
              f"{r2:.17g} vs {p2:.17g}")

    if ex.strict_convexity_regime and not pn.degenerate:
        rt = inflection_root(lam, nt, ex)
        grid = np.geomspace(pn.t_plus, pn.t_minus, 4001)
        v = np.sign(_rn_d2_scaled(grid, lam, nt, ex))
        flips = int(np.count_nonzero(v[:-1] * v[1:] < 0))
        check(flips == 1 and pn.t_plus < rt < pn.t_minus, "unique inflection of R_n in (t_n+, t_n-)",
              f"sign changes={flips} r={rt:.17g}")
    return checks, fails


def _rn_d2_scaled(t, lam, nt, ex):
    """``t^alpha c R_n''``; same sign as ``R_n''``."""
    q, al, g = ex.q, ex.alpha, ex.gamma
    return ((2 - al) * (1 - al) * nt.a + (q - al) * (q - al - 1) * lam * t**(q - 2) * nt.b
            - (g - al) * (g - al - 1) * t**(g - 2) * nt.d)


@dataclass(frozen=True)
class _LemmaJob:
    seed: np.random.SeedSequence
    convex: bool
    constants: Optional[tuple]


def _run_lemma_job(job: _LemmaJob):
    rng = np.random.default_rng(job.seed)
    ex = sample_exponents(rng, convex=job.convex)
    nt = sample_norm_tuple(rng)
    lam = sample_lambda(rng, nt, ex)
    const = None
    if job.constants is not None:
        const = replace(FiberConstants.from_exponents(ex), **dict(job.constants))
    return check_case(nt, ex, lam, const, rng)


def verify_lemma_suite(n_cases: int, seed: int = 42, convex: bool = False,
                       constant_override: Optional[dict] = None, workers: Optional[int] = None
                       ) -> VerifyReport:
    """Randomized identity suite over sampled exponents, tuples and ``lambda``.

    ``constant_override`` replaces fields of the closed-form constants (fault
    injection), e.g. ``{"c_e": 0.17}``.
    """
    if n_cases < 1:
        raise ValidationError(f"n_cases must be positive, got {n_cases}")
    over = tuple(sorted(constant_override.items())) if constant_override else None
    jobs = [_LemmaJob(s, convex, over) for s in np.random.SeedSequence(seed).spawn(n_cases)]
    return _merge(parallel_map(_run_lemma_job, jobs, workers), seed, "lemma-suite")


# -- root structure ----------------------------------------------------------

MU_PLACEMENTS = ("inside", "low_edge", "high_edge", "below", "above")


def _sample_mu(rng, placement, lo, hi):
    width = hi - lo
    if placement == "inside":
        return lo + width * rng.uniform(0.05, 0.95)
    if placement == "low_edge":
        return lo
    if placement == "high_edge":
        return hi
    if placement == "below":
        return lo - width * rng.uniform(0.05, 2.0)
    return hi + width * rng.uniform(0.05, 2.0)


def _root_level(t, lam, mu, nt, ex):
    q, al, g = ex.q, ex.alpha, ex.gamma
    return (t**(2 - al) * nt.a + lam * t**(q - al) * nt.b - t**(g - al) * nt.d) / nt.c - mu


def check_root_case(nt, ex, lam, mu, n_samples=10**6):
    """Compare ``nehari_roots`` with a dense log scan; returns (checks, failures)."""
    desc = _describe(nt, ex, lam, mu)
    fails, checks = [], 0

    def check(ok, relation, observed):
        nonlocal checks
        checks += 1
        if not ok:
            fails.append((desc, relation, observed))

    triple = nehari_roots(lam, mu, nt, ex)
    t_lo, t_hi = nehari_scan_range(lam, mu, nt, ex)
    t_lo, t_hi = 0.5 * t_lo, 2.0 * t_hi

    def f(t):
        return _root_level(t, lam, mu, nt, ex)

    # |f| at a touch sample is O(spacing^2) relative to the terms
    t = np.geomspace(t_lo, t_hi, n_samples)
    step = math.log(t_hi / t_lo) / (n_samples - 1)
    q, al, g = ex.q, ex.alpha, ex.gamma
    roots = scan_roots(f, t_lo, t_hi, n_samples, atol=0.0)
    scale_fn = lambda s: (s**(2 - al) * nt.a + lam * s**(q - al) * nt.b + s**(g - al) * nt.d) / nt.c
    touches = []
    if triple.merged_low or triple.merged_high:
        # a double root shows no sign change; look for a near-zero local extremum of f
        v = f(t)
        inner = np.flatnonzero((np.abs(v[1:-1]) <= np.abs(v[:-2])) & (np.abs(v[1:-1]) <= np.abs(v[2:]))) + 1
        for i in inner:
            if abs(v[i]) <= 10 * step**2 * scale_fn(t[i]) and v[i - 1] * v[i + 1] > 0:
                touches.append(ScanRoot(float(t[i - 1]), float(t[i + 1]), 2))
    scanned = sorted(roots + touches, key=lambda r: r.lo)
    count = len(scanned)
    check(count == triple.count, "root count matches dense scan", f"solver={triple.count} scan={count}")
    if count == triple.count:
        for s, r in zip(triple.roots, scanned):
            check(r.lo <= s <= r.hi or abs(s - 0.5 * (r.lo + r.hi)) <= 10 * 1e-12 * s + (r.hi - r.lo),
                  "solver root inside scan bracket", f"root={s:.17g} bracket=({r.lo:.17g},{r.hi:.17g})")
    expected = {"s0": -1, "s1": 1, "s2": -1}
    for name in ("s0", "s1", "s2"):
        s = getattr(triple, name)
        # at a double root both derivatives vanish
        if s is None or (triple.merged_low and name != "s2") or (triple.merged_high and name != "s0"):
            continue
        d1 = float(rayleigh_n_d1(s, lam, nt, ex))
        check(np.sign(d1) == expected[name], f"sign R_n' at {name} is {'+' if expected[name] > 0 else '-'}",
              f"{name}={s:.17g} R_n'={d1:.17g}")
        p2 = float(phi_d2(s, lam, mu, nt, ex))
        check(np.sign(p2) == expected[name], f"sign Phi'' at {name} is {'+' if expected[name] > 0 else '-'}",
              f"{name}={s:.17g} Phi''={p2:.17g}")
    return checks, fails


@dataclass(frozen=True)
class _RootJob:
    seed: np.random.SeedSequence
    placement: str
    n_samples: int


def _run_root_job(job: _RootJob):
    rng = np.random.default_rng(job.seed)
    ex = sample_exponents(rng)
    nt = sample_norm_tuple(rng)
    lam = sample_lambda(rng, nt, ex)
    mq = mu_quotients(lam, nt, ex)
    mu = _sample_mu(rng, job.placement, mq.n_plus, mq.n_minus)
    return check_root_case(nt, ex, lam, mu, job.n_samples)


def verify_root_structure(n_cases: int, seed: int = 42, n_samples: int = 10**6,
                          workers: Optional[int] = None) -> VerifyReport:
    """Root counts and derivative signs of ``rayleigh_n(t) = mu`` against dense scans.

    ``mu`` cycles through placements inside the three-root band, exactly on
    either edge, and below or above it.
    """
    if n_cases < 1:
        raise ValidationError(f"n_cases must be positive, got {n_cases}")
    seeds = np.random.SeedSequence(seed).spawn(n_cases)
    jobs = [_RootJob(s, MU_PLACEMENTS[i % len(MU_PLACEMENTS)], n_samples) for i, s in enumerate(seeds)]
    return _merge(parallel_map(_run_root_job, jobs, workers), seed, "root-structure")
