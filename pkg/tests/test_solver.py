import math

import numpy as np
import pytest

from ngrayleigh.descent import DescentOptions
from ngrayleigh.discretization import GridSpec, energy, gradient_energy, lp_mass, norm_tuple, sine_bump
from ngrayleigh.errors import BandViolation, DomainError, UnsupportedRegimeError, ValidationError
from ngrayleigh.extremal import MU_KINDS, minimize_mu
from ngrayleigh.fibering import (
    Exponents, critical_pair, inflection_root, nehari_roots, rayleigh_n, rayleigh_n_d1,
)
from ngrayleigh.solver import (
    classify_solution, coercivity_probe, nehari_slice_samples, sobolev_constant, solve_branch1,
    solve_branch2,
)

LAM = 0.1
TOL_ENERGY = 1e-6


@pytest.fixture(scope="module")
def setup(worked_ex):
    g = GridSpec.interval(128)
    mu = {k: minimize_mu(k, LAM, g, worked_ex).value for k in MU_KINDS}
    return g, mu


@pytest.fixture(scope="module")
def branches(setup, worked_ex):
    g, mu = setup
    mid = 0.5 * (mu["e_plus"] + mu["n_minus"])
    return mid, solve_branch1(LAM, mid, g, worked_ex), solve_branch2(LAM, mid, g, worked_ex)


class TestBranch1:
    def test_signs(self, branches):
        _, r1, _ = branches
        assert r1.status == "converged" and r1.branch == 1
        assert r1.phi_value < 0
        assert r1.phi_d2_sign == "+" and r1.rn_d1_sign == "+"
        assert r1.positive
        assert r1.nehari_gap < 1e-12
        assert r1.residual < 1e-5

    def test_on_own_fiber(self, branches, worked_ex):
        mid, r1, _ = branches
        nt = norm_tuple(r1.solution, worked_ex)
        assert r1.s_roots.s1 == pytest.approx(1.0, abs=1e-12)
        assert rayleigh_n(1.0, LAM, nt, worked_ex) == pytest.approx(mid, rel=1e-10)
        assert rayleigh_n_d1(1.0, LAM, nt, worked_ex) > 0

    def test_classify_idempotent(self, branches, worked_ex):
        mid, r1, _ = branches
        again = classify_solution(r1.solution, LAM, mid, worked_ex)
        assert (again.phi_d2_sign, again.rn_d1_sign, again.positive) == ("+", "+", True)
        assert again.phi_value == r1.phi_value

    @pytest.mark.parametrize("k", [0.5, 1.5])
    def test_scaled_leaves_nehari(self, branches, worked_ex, k):
        mid, r1, _ = branches
        assert classify_solution(r1.solution.scaled(k), LAM, mid, worked_ex).nehari_gap > 1e-3

    def test_band_violation_at_start(self, setup, worked_ex):
        g, mu = setup
        with pytest.raises(BandViolation, match="fewer than three"):
            solve_branch1(LAM, mu["n_minus"] + 5, g, worked_ex)

    def test_lambda_positive(self, setup, worked_ex):
        with pytest.raises(DomainError):
            solve_branch1(-0.1, 5.0, setup[0], worked_ex)


class TestBranch2:
    def test_signs(self, branches):
        _, r1, r2 = branches
        assert r2.status == "converged" and r2.branch == 2
        assert r2.phi_d2_sign == "-" and r2.rn_d2_sign == "-"
        assert r2.positive and r2.nehari_gap < 1e-12

    def test_distinct_from_branch1(self, branches):
        _, r1, r2 = branches
        d = np.linalg.norm(r1.solution.values - r2.solution.values) / np.linalg.norm(r2.solution.values)
        assert d > 1e-3
        assert r1.phi_value < r2.phi_value

    def test_outer_root_ordering(self, branches, worked_ex):
        _, _, r2 = branches
        nt = norm_tuple(r2.solution, worked_ex)
        assert r2.s_roots.s2 == pytest.approx(1.0, abs=1e-12)
        t_minus = critical_pair("n", LAM, nt, worked_ex).t_minus
        assert inflection_root(LAM, nt, worked_ex) < t_minus < r2.s_roots.s2

    @pytest.mark.parametrize("offset, sign", [(-0.05, 1), (0.0, 0), ("mid", -1)])
    def test_trichotomy(self, setup, worked_ex, offset, sign):
        g, mu = setup
        m = 0.5 * (mu["e_minus"] + mu["n_minus"]) if offset == "mid" else mu["e_minus"] + offset
        r = solve_branch2(LAM, m, g, worked_ex)
        assert r.status == "converged"
        if sign == 0:
            assert abs(r.phi_value) < TOL_ENERGY
        else:
            assert sign * r.phi_value > TOL_ENERGY

    def test_slightly_above_e_minus(self, setup, worked_ex):
        g, mu = setup
        m = mu["e_minus"] + 0.05
        r = classify_solution(solve_branch2(LAM, m, g, worked_ex).solution, LAM, m, worked_ex)
        assert r.phi_value < 0 and r.phi_d2_sign == "-"

    def test_negative_mu(self, setup, worked_ex):
        r = solve_branch2(LAM, -3.0, setup[0], worked_ex)
        assert r.status == "converged" and r.phi_value > 0 and r.positive

    def test_unsupported_regime(self, setup):
        ex = Exponents(1.5, 1.75, 2.5)
        with pytest.raises(UnsupportedRegimeError):
            solve_branch2(LAM, 1.0, setup[0], ex)


def test_report_text(branches):
    _, r1, _ = branches
    lines = dict(line.split(": ", 1) for line in r1.to_text().splitlines())
    assert lines["branch"] == "1" and lines["phi_d2_sign"] == "+"
    assert float(lines["phi_value"]) == r1.phi_value
    assert float(lines["h1_norm"]) == pytest.approx(math.sqrt(gradient_energy(r1.solution)))


def test_not_converged_status(setup, worked_ex):
    g, mu = setup
    r = solve_branch1(LAM, 0.5 * (mu["e_plus"] + mu["n_minus"]), g, worked_ex, DescentOptions(max_iter=1))
    assert r.status == "not-converged" and not r.converged


class TestCoercivity:
    GRID = GridSpec.interval(128, 4.0)

    def test_slice_points(self, worked_ex):
        pts = nehari_slice_samples(LAM, 0.5, self.GRID, worked_ex, 3.0, 5, np.random.default_rng(1))
        assert len(pts) == 5
        for w in pts:
            assert math.sqrt(gradient_energy(w)) == pytest.approx(3.0, rel=1e-12)
            roots = nehari_roots(LAM, 0.5, norm_tuple(w, worked_ex), worked_ex)
            assert min(abs(s - 1.0) for s in (roots.s0, roots.s1, roots.s2) if s is not None) < 1e-9

    def test_growth_and_bound(self, worked_ex):
        rows = coercivity_probe(LAM, 0.5, self.GRID, worked_ex, [1.0, 10.0], n_samples=16, seed=0)
        assert rows[1].min_phi > rows[0].min_phi
        assert all(r.n_points == 16 and r.min_phi >= r.lower_bound for r in rows)

    def test_nonpositive_mu_bound(self, worked_ex):
        g = worked_ex.gamma
        for R in (5.0, 20.0):
            pts = nehari_slice_samples(LAM, -1.0, self.GRID, worked_ex, R, 4, np.random.default_rng(2))
            assert pts
            assert all(energy(w, LAM, -1.0, worked_ex) >= (g - 2) / (2 * g) * R**2 for w in pts)

    def test_radii_validated(self, worked_ex):
        with pytest.raises(ValidationError):
            coercivity_probe(LAM, 0.5, self.GRID, worked_ex, [2.0, 1.0], sobolev_c=1.0)

    def test_sobolev_constant_beats_bump(self, worked_ex):
        u = sine_bump(self.GRID)
        bump = lp_mass(u, worked_ex.alpha) / gradient_energy(u) ** (worked_ex.alpha / 2)
        assert sobolev_constant(self.GRID, worked_ex.alpha) >= bump
