"""Extremal values of the 0-homogeneous quotients over the discrete space.

``minimize_lambda_star`` approximates ``inf_u sup_t Lambda(t u)`` and
``minimize_mu`` the infima of the four ``mu`` quotients at fixed ``lambda``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .descent import DescentOptions, sphere_descent
from .discretization import DiscreteField, GridSpec, norm_tuple, quotient_gradient, sine_bump
from .errors import DomainError, ValidationError
from .fibering import Exponents, quotient_value_and_partials

MU_KINDS = ("n_plus", "e_plus", "e_minus", "n_minus")


@dataclass
class ExtremalResult:
    kind: str
    value: float
    minimizer: DiscreteField
    iterations: int
    converged: bool
    gradient_norm: float
    lam: Optional[float] = None
    upper_bound: bool = False
    history: list = field(default_factory=list, repr=False)
    ex: Optional[Exponents] = field(default=None, repr=False)

    @property
    def critical_t(self) -> float:
        """Fiber critical point of the minimizer (``t_star`` for lambda kinds)."""
        which = self.kind if self.kind.startswith("lambda") else f"mu_{self.kind}"
        nt = norm_tuple(self.minimizer, self.ex)
        return quotient_value_and_partials(which, self.lam or 0.0, nt, self.ex)[2]


def _quotient_objective(which, lam, ex):
    def objective(u):
        nt = norm_tuple(u, ex)
        res = quotient_value_and_partials(which, lam, nt, ex)
        if res is None:
            return None
        if which.startswith("mu_") and _pair_degenerate(which, lam, nt, ex):
            return None
        return res[0], quotient_gradient(which, u, lam, ex, nt=nt)
    return objective


def _pair_degenerate(which, lam, nt, ex):
    from .fibering import critical_pair
    pair = critical_pair(which.split("_")[1], lam, nt, ex)
    return pair is None or pair.degenerate


def _finish(kind, res, lam, ex, upper_bound=False):
    out = ExtremalResult(kind=kind, value=res.value, minimizer=res.field, iterations=res.iterations,
                         converged=res.converged, gradient_norm=res.gradient_norm, lam=lam,
                         upper_bound=upper_bound, history=res.history, ex=ex)
    return out


def minimize_lambda_star(kind: str, grid: GridSpec, ex: Exponents,
                         opts: Optional[DescentOptions] = None, u0: Optional[DiscreteField] = None
                         ) -> ExtremalResult:
    """Approximate ``lambda_star_{kind} = inf_u lambda_star_of_u(kind, u)``."""
    if kind not in ("e", "n"):
        raise ValidationError(f"kind must be 'e' or 'n', got {kind!r}")
    opts = opts or DescentOptions()
    u0 = u0 if u0 is not None else sine_bump(grid)
    res = sphere_descent(_quotient_objective(f"lambda_star_{kind}", 0.0, ex), u0, opts)
    return _finish(f"lambda_star_{kind}", res, None, ex)


def minimize_mu(kind: str, lam: float, grid: GridSpec, ex: Exponents,
                opts: Optional[DescentOptions] = None, u0: Optional[DiscreteField] = None
                ) -> ExtremalResult:
    """Approximate the infimum of the ``mu_{kind}`` quotient at ``lam``.

    ``kind`` is one of ``n_plus, e_plus, e_minus, n_minus``.  Minimizers are
    only guaranteed for the ``minus`` kinds, so ``plus`` results carry
    ``upper_bound=True``.  Trial fields whose fiber loses its critical pair
    are rejected by the line search.
    """
    if kind not in MU_KINDS:
        raise ValidationError(f"kind must be one of {MU_KINDS}, got {kind!r}")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    opts = opts or DescentOptions()
    u0 = u0 if u0 is not None else sine_bump(grid)
    which = f"mu_{kind}"
    objective = _quotient_objective(which, lam, ex)
    if objective(u0.abs()) is None:
        fam = kind.split("_")[0]
        raise DomainError(
            f"{which} needs lambda < lambda_star_{fam}(u0); lambda={lam} violates it for the initial field")
    res = sphere_descent(objective, u0, opts)
    return _finish(kind, res, lam, ex, upper_bound=kind.endswith("plus"))


@dataclass
class ExtremalCurve:
    lambda_values: list
    mu_n_plus: list
    mu_e_plus: list
    mu_e_minus: list
    mu_n_minus: list
    converged: list
    lambda_star_e: Optional[float] = None
    lambda_star_n: Optional[float] = None
    results: list = field(default_factory=list, repr=False)

    HEADER = "lambda,mu_n_plus,mu_e_plus,mu_e_minus,mu_n_minus,converged_flags"

    def rows(self):
        for i, lam in enumerate(self.lambda_values):
            yield (lam, self.mu_n_plus[i], self.mu_e_plus[i], self.mu_e_minus[i],
                   self.mu_n_minus[i], self.converged[i])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.HEADER + "\n")
            for lam, *mus, flags in self.rows():
                cells = [_fmt(lam)] + [_fmt(m) for m in mus] + [flags]
                fh.write(",".join(cells) + "\n")

    def complete_rows_ordered(self) -> bool:
        for _, npl, epl, emi, nmi, _ in self.rows():
            if None in (npl, epl, emi, nmi):
                continue
            if not (npl <= epl < emi < nmi):
                return False
        return True


def _fmt(x):
    return "" if x is None else f"{x:.17g}"


def extremal_curve(lambda_grid: Sequence[float], grid: GridSpec, ex: Exponents,
                   opts: Optional[DescentOptions] = None, lambda_stars=None) -> ExtremalCurve:
    """Tabulate the four ``mu`` extremal values over ascending ``lambda`` samples.

    Each column is warm-started from the previous row's minimizer.  Columns
    are left empty once ``lambda`` reaches the estimated ``lambda_star`` of
    their family.
    """
    lams = [float(v) for v in lambda_grid]
    if any(v <= 0 for v in lams) or any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValidationError("lambda samples must be positive and strictly ascending")
    opts = opts or DescentOptions()
    if lambda_stars is None:
        lambda_stars = (minimize_lambda_star("e", grid, ex, opts).value,
                        minimize_lambda_star("n", grid, ex, opts).value)
    lse, lsn = lambda_stars
    cols = {k: [] for k in MU_KINDS}
    flags, results = [], []
    warm = {k: None for k in MU_KINDS}
    for lam in lams:
        row_flags, row = [], {}
        for k in MU_KINDS:
            bound = lse if k.startswith("e") else lsn
            res = None
            if lam < bound:
                try:
                    res = minimize_mu(k, lam, grid, ex, opts, u0=warm[k])
                except DomainError:
                    res = None
            if res is None:
                cols[k].append(None)
                row_flags.append("-")
            else:
                cols[k].append(res.value)
                row_flags.append("1" if res.converged else "0")
                warm[k] = res.minimizer
            row[k] = res
        flags.append("".join(row_flags))
        results.append(row)
    return ExtremalCurve(lams, cols["n_plus"], cols["e_plus"], cols["e_minus"], cols["n_minus"],
                         flags, lse, lsn, results)


def lambda_grid_from_spec(spec: str):
    """Parse ``lo:hi:count`` into an evenly spaced list."""
    try:
        lo, hi, count = spec.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise ValidationError(f"grid spec must look like lo:hi:count, got {spec!r}") from exc
    if count < 1:
        raise ValidationError("grid count must be positive")
    if count == 1:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]
