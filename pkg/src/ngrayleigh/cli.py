"""Command-line entry point ``ngrayleigh``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig
from .discretization import write_field_csv
from .errors import BandViolation, NGRayleighError, UnsupportedRegimeError, ValidationError
from .extremal import extremal_curve, lambda_grid_from_spec, minimize_mu
from .fibering import (
    Exponents, NormTuple, analyze_fiber, nehari_roots, phi_d2, rayleigh_n_d1,
)
from .oracle import parallel_map, verify_lemma_suite, verify_root_structure
from .solver import solve_branch1, solve_branch2

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BAND = 3
EXIT_NOT_CONVERGED = 4
STATUS_EXIT = {"converged": EXIT_OK, "band-violation": EXIT_BAND, "not-converged": EXIT_NOT_CONVERGED}


def _g(x):
    return "" if x is None else f"{x:.17g}"


def _sgn(x):
    return "+" if x > 0 else ("-" if x < 0 else "0")


def _load_config(args) -> RunConfig:
    return RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()


def _write(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- fiber -------------------------------------------------------------------

def fiber_document(lam, nt: NormTuple, ex: Exponents, mu=None) -> str:
    fa = analyze_fiber(lam, nt, ex)
    rows = [
        ("q", ex.q), ("alpha", ex.alpha), ("gamma", ex.gamma),
        ("a", nt.a), ("b", nt.b), ("c", nt.c), ("d", nt.d), ("lambda", lam),
        ("t_star_e", fa.t_star_e), ("t_star_n", fa.t_star_n),
        ("lambda_star_e_u", fa.lambda_star_e_u), ("lambda_star_n_u", fa.lambda_star_n_u),
    ]
    lines = [f"{k}: {_g(v)}" for k, v in rows]
    for kind, pair in (("e", fa.crit_e), ("n", fa.crit_n)):
        if pair is None:
            lines.append(f"{kind}_critical_points: none (lambda exceeds lambda_star_{kind}(u))")
        else:
            lines.append(f"t_{kind}_plus: {_g(pair.t_plus)}")
            lines.append(f"t_{kind}_minus: {_g(pair.t_minus)}")
            if pair.degenerate:
                lines.append(f"{kind}_critical_points: degenerate")
    m = fa.mu
    for name in ("n_plus", "e_plus", "e_minus", "n_minus"):
        lines.append(f"mu_{name}: {_g(getattr(m, name))}")
    if None not in m:
        lines.append(f"mu_ordering_holds: {str(m.ordered()).lower()}")
    if fa.inflection_r is not None:
        lines.append(f"inflection_r: {_g(fa.inflection_r)}")
    if mu is not None:
        rt = nehari_roots(lam, mu, nt, ex)
        lines.append(f"mu: {_g(mu)}")
        lines.append(f"root_count: {rt.count}")
        for name in ("s0", "s1", "s2"):
            s = getattr(rt, name)
            if s is None:
                continue
            lines.append(f"{name}: {_g(s)}")
            lines.append(f"{name}_rn_d1_sign: {_sgn(float(rayleigh_n_d1(s, lam, nt, ex)))}")
            lines.append(f"{name}_phi_d2_sign: {_sgn(float(phi_d2(s, lam, mu, nt, ex)))}")
        if rt.merged_low or rt.merged_high:
            lines.append("double_root: " + ("low" if rt.merged_low else "high"))
    return "\n".join(lines) + "\n"


def cmd_fiber(args) -> int:
    ex = Exponents(args.q, args.alpha, args.gamma)
    nt = NormTuple(args.a, args.b, args.c, args.d)
    _write(fiber_document(args.lam, nt, ex, args.mu), args.out)
    return EXIT_OK


# -- extremal ----------------------------------------------------------------

def cmd_extremal(args) -> int:
    cfg = _load_config(args)
    lams = lambda_grid_from_spec(args.lambda_grid)
    curve = extremal_curve(lams, cfg.grid, cfg.exponents, cfg.descent_options())
    out = Path(args.out)
    curve.to_csv(out)
    side = out.with_suffix(".summary.txt")
    side.write_text(
        f"lambda_star_e: {_g(curve.lambda_star_e)}\n"
        f"lambda_star_n: {_g(curve.lambda_star_n)}\n"
        f"rows: {len(curve.lambda_values)}\n"
        f"ordering_holds: {str(curve.complete_rows_ordered()).lower()}\n"
        "plus_columns: upper bounds (attainment not established)\n")
    if args.figures:
        from .plotting import plot_extremal_curve
        plot_extremal_curve(curve, out.with_suffix(".png"))
    print(out)
    return EXIT_OK


# -- solve -------------------------------------------------------------------

def run_solve(branch, lam, mu, cfg: RunConfig):
    fn = solve_branch1 if branch == 1 else solve_branch2
    return fn(lam, mu, cfg.grid, cfg.exponents, cfg.descent_options(), tol=cfg.tolerances.tol_root)


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    try:
        rep = run_solve(args.branch, args.lam, args.mu, cfg)
    except BandViolation as exc:
        out.write_text(f"branch: {args.branch}\nstatus: band-violation\nlambda: {_g(args.lam)}\n"
                       f"mu: {_g(args.mu)}\nmessage: {exc}\n")
        print(f"band violation: {exc}", file=sys.stderr)
        return EXIT_BAND
    out.write_text(rep.to_text())
    field_path = out.with_suffix(".field.csv")
    write_field_csv(rep.solution, field_path)
    if args.figures:
        from .plotting import plot_field
        plot_field(rep.solution, out.with_suffix(".png"),
                   title=f"branch {args.branch}, lambda={args.lam:g}, mu={args.mu:g}")
    print(out)
    return STATUS_EXIT[rep.status]


# -- scan --------------------------------------------------------------------

SCAN_HEADER = ("lambda,mu,mu_e_plus,mu_e_minus,mu_n_minus,region,"
               "b1_status,b1_phi,b1_phi_sign,b2_status,b2_phi,b2_phi_sign,consistent")


@dataclass(frozen=True)
class _Cell:
    lam: float
    mu: float
    bounds: tuple
    cfg_yaml: str


def _region(mu, bounds):
    ep, em, nm = bounds
    if None in bounds:
        return "beyond_lambda_star"
    if mu <= ep:
        return "below_e_plus"
    if mu < em:
        return "between_e_plus_e_minus"
    if mu < nm:
        return "between_e_minus_n_minus"
    return "above_n_minus"


def _phi_sign(phi, tol):
    return "0" if abs(phi) <= tol * (1 + abs(phi)) else _sgn(phi)


def _solve_cell(cell: _Cell) -> dict:
    import yaml
    cfg = RunConfig.from_dict(yaml.safe_load(cell.cfg_yaml))
    row = {"lambda": cell.lam, "mu": cell.mu, "mu_e_plus": cell.bounds[0],
           "mu_e_minus": cell.bounds[1], "mu_n_minus": cell.bounds[2],
           "region": _region(cell.mu, cell.bounds)}
    for br in (1, 2):
        try:
            rep = run_solve(br, cell.lam, cell.mu, cfg)
            status, phi = rep.status, rep.phi_value
        except BandViolation:
            status, phi = "band-violation", None
        except UnsupportedRegimeError:
            status, phi = "unsupported", None
        row[f"b{br}_status"] = status
        row[f"b{br}_phi"] = phi
        row[f"b{br}_phi_sign"] = "" if phi is None or status != "converged" else _phi_sign(
            phi, cfg.tolerances.tol_energy)
    row["consistent"] = _consistent(row)
    return row


def _consistent(row) -> bool:
    """Converged energies agree with the sign predictions for the cell's region."""
    region = row["region"]
    ok = True
    if region in ("between_e_plus_e_minus", "between_e_minus_n_minus") and row["b1_phi_sign"]:
        ok &= row["b1_phi_sign"] == "-"
    expect2 = {"below_e_plus": "+", "between_e_plus_e_minus": "+", "between_e_minus_n_minus": "-"}
    if region in expect2 and row["b2_phi_sign"]:
        ok &= row["b2_phi_sign"] in (expect2[region], "0")
    return bool(ok)


def scan_plane(lams, mus, cfg: RunConfig, workers=None):
    opts = cfg.descent_options()
    bounds = {}
    for lam in lams:
        vals = []
        for kind in ("e_plus", "e_minus", "n_minus"):
            try:
                vals.append(minimize_mu(kind, lam, cfg.grid, cfg.exponents, opts).value)
            except NGRayleighError:
                vals.append(None)
        bounds[lam] = tuple(vals)
    cfg_yaml = cfg.to_yaml()
    cells = [_Cell(lam, mu, bounds[lam], cfg_yaml) for lam in lams for mu in mus]
    return parallel_map(_solve_cell, cells, workers)


def write_scan_csv(rows, path):
    keys = SCAN_HEADER.split(",")
    with open(path, "w", newline="") as fh:
        fh.write(SCAN_HEADER + "\n")
        for r in rows:
            cells = []
            for k in keys:
                v = r[k]
                if isinstance(v, bool):
                    cells.append(str(v).lower())
                elif isinstance(v, float):
                    cells.append(_g(v))
                elif v is None:
                    cells.append("")
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")


def cmd_scan(args) -> int:
    cfg = _load_config(args)
    lams = lambda_grid_from_spec(args.lambda_grid)
    mus = lambda_grid_from_spec(args.mu_grid)
    rows = scan_plane(lams, mus, cfg)
    out = Path(args.out)
    write_scan_csv(rows, out)
    if args.figures:
        from .plotting import plot_scan
        plot_scan(rows, out.with_suffix(".png"))
    print(out)
    return EXIT_OK


# -- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    reports = []
    if args.suite in ("lemma", "all"):
        reports.append(verify_lemma_suite(args.cases, args.seed))
    if args.suite in ("roots", "all"):
        reports.append(verify_root_structure(args.cases, args.seed, n_samples=args.samples))
    text = "".join(r.to_text() for r in reports)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.with_suffix(".txt").write_text(text)
        for r in reports:
            r.to_csv(out.with_name(f"{out.stem}.{r.name}.csv"))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_ERROR


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ngrayleigh", description=(
        "Fiber analysis, extremal values and positive solution branches for "
        "-Δu = |u|^(γ-2)u + μ|u|^(α-2)u - λ|u|^(q-2)u with Dirichlet data."))
    p.add_argument("--print-config", action="store_true",
                   help="print the effective configuration (defaults or --config) and exit")
    p.add_argument("--config", help="YAML configuration file")
    sub = p.add_subparsers(dest="command")

    f = sub.add_parser("fiber", help="critical-point structure of a single fiber")
    for name in ("q", "alpha", "gamma", "a", "b", "c", "d"):
        f.add_argument(f"--{name}", type=float, required=True)
    f.add_argument("--lambda", dest="lam", type=float, required=True)
    f.add_argument("--mu", type=float)
    f.add_argument("--out", help="write the document here instead of stdout")
    f.set_defaults(func=cmd_fiber)

    def common(sp):
        sp.add_argument("--config", default=argparse.SUPPRESS, help="YAML configuration file")
        sp.add_argument("--out", required=True)
        sp.add_argument("--figures", action="store_true", help="also render PNG figures next to the output")

    e = sub.add_parser("extremal", help="tabulate mu extremal values over a lambda grid")
    e.add_argument("--lambda-grid", required=True, help="lo:hi:count")
    common(e)
    e.set_defaults(func=cmd_extremal)

    s = sub.add_parser("solve", help="compute one positive solution branch")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--branch", type=int, choices=(1, 2), required=True)
    common(s)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("scan", help="classify both branches over a (lambda, mu) rectangle")
    c.add_argument("--lambda-grid", required=True, help="lo:hi:count")
    c.add_argument("--mu-grid", required=True, help="lo:hi:count")
    common(c)
    c.set_defaults(func=cmd_scan)

    v = sub.add_parser("verify", help="randomized identity and root-structure suites")
    v.add_argument("--cases", type=int, default=1000)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--suite", choices=("lemma", "roots", "all"), default="lemma")
    v.add_argument("--samples", type=int, default=10**6, help="dense-scan samples per root case")
    v.add_argument("--out", help="path prefix for the text report and failure CSVs")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.print_config:
            sys.stdout.write(_load_config(args).to_yaml())
            return EXIT_OK
        if not args.command:
            parser.print_usage(sys.stderr)
            return 2
        return args.func(args)
    except ValidationError as exc:
        parser.error(str(exc))
    except (NGRayleighError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
