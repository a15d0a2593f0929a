import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ngrayleigh.errors import BracketError, DomainError, UnsupportedRegimeError, ValidationError
from ngrayleigh.fibering import (
    Exponents, FiberConstants, NormTuple, analyze_fiber, bisect_root, critical_pair,
    inflection_root, lambda_fiber, lambda_star_closed_form, lambda_star_of_u, lambda_star_ratio,
    mu_quotients, nehari_roots, phi_d1, phi_fiber, quotient_value_and_partials, rayleigh_e,
    rayleigh_n, rayleigh_n_d1, rayleigh_n_d2, t_star,
)

import mp_oracle
from reference import (
    LAMBDA_STAR_E, LAMBDA_STAR_N, MU_REF, ROOTS_066, T_E_MINUS, T_E_PLUS, T_N_MINUS, T_N_PLUS,
)

exponents = st.tuples(
    st.floats(1.05, 1.9), st.floats(0.05, 0.9), st.floats(2.5, 6.0)
).filter(lambda v: v[0] + v[1] < 1.95).map(lambda v: Exponents(v[0], v[0] + v[1], v[2]))
tuples = st.tuples(*[st.floats(-2, 2)] * 4).map(lambda v: NormTuple(*(10.0**x for x in v)))


class TestValidation:
    @pytest.mark.parametrize("q, alpha, gamma, needle", [
        (1.0, 1.5, 3.0, "1 < q"),
        (1.6, 1.5, 3.0, "q < alpha"),
        (1.5, 2.0, 3.0, "alpha < 2"),
        (1.5, 1.75, 2.0, "2 < gamma"),
    ])
    def test_order_violation_names_inequality(self, q, alpha, gamma, needle):
        with pytest.raises(ValidationError, match=needle):
            Exponents(q, alpha, gamma)

    def test_critical_exponent_in_3d(self):
        assert Exponents(1.5, 1.75, 5.9, dim=3).critical_exponent == 6.0
        with pytest.raises(ValidationError, match="2\\*"):
            Exponents(1.5, 1.75, 6.0, dim=3)

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
    def test_norm_tuple_rejects(self, bad):
        with pytest.raises(ValidationError):
            NormTuple(1.0, bad, 1.0, 1.0)

    def test_regime_flag(self):
        assert Exponents(1.5, 1.75, 3.0).strict_convexity_regime
        assert not Exponents(1.5, 1.75, 2.6).strict_convexity_regime

    def test_negative_t_rejected(self, ex, ones):
        with pytest.raises(DomainError):
            rayleigh_n(-1.0, 0.1, ones, ex)
        with pytest.raises(DomainError):
            phi_fiber(np.array([0.1, -0.1]), 0.1, 0.5, ones, ex)


class TestWorkedTuple:
    def test_t_star(self, ex, ones):
        assert t_star("e", ones, ex) == pytest.approx(0.1, rel=1e-14)
        assert t_star("n", ones, ex) == pytest.approx(1 / 15, rel=1e-14)

    def test_lambda_star(self, ex, ones):
        assert lambda_star_of_u("e", ones, ex) == pytest.approx(LAMBDA_STAR_E, rel=1e-13)
        assert lambda_star_of_u("n", ones, ex) == pytest.approx(LAMBDA_STAR_N, rel=1e-13)

    def test_closed_form_agrees_with_sup(self, ex, ones):
        for kind in ("e", "n"):
            assert lambda_star_closed_form(kind, ones, ex) == pytest.approx(
                lambda_star_of_u(kind, ones, ex), rel=1e-13)

    def test_critical_pairs(self, ex, ones):
        pe = critical_pair("e", 0.1, ones, ex)
        pn = critical_pair("n", 0.1, ones, ex)
        assert (pe.t_plus, pe.t_minus) == pytest.approx((T_E_PLUS, T_E_MINUS), rel=1e-11)
        assert (pn.t_plus, pn.t_minus) == pytest.approx((T_N_PLUS, T_N_MINUS), rel=1e-11)

    def test_mu_quotients(self, ex, ones):
        m = mu_quotients(0.1, ones, ex)
        assert (m.n_plus, m.e_plus, m.e_minus, m.n_minus) == pytest.approx(MU_REF, abs=1e-12)
        assert m.ordered()

    def test_three_roots(self, ex, ones):
        r = nehari_roots(0.1, 0.66, ones, ex)
        assert r.count == 3
        assert (r.s0, r.s1, r.s2) == pytest.approx(ROOTS_066, rel=1e-11)

    def test_large_mu_leaves_small_root(self, ex, ones):
        r = nehari_roots(0.1, 10.0, ones, ex)
        assert r.count == 1 and r.s1 is None and r.s2 is None
        assert r.s0 == pytest.approx(1.0040140481251309e-8, rel=1e-10)

    def test_small_mu_leaves_tail_root(self, ex, ones):
        r = nehari_roots(0.1, 0.1, ones, ex)
        assert r.count == 1 and r.s0 is None
        assert r.s2 > T_N_MINUS

    def test_lambda_above_bound(self, ex, ones):
        assert critical_pair("e", 0.2, ones, ex) is None
        m = mu_quotients(0.2, ones, ex)
        assert m == (None, None, None, None)

    def test_tangency_is_degenerate(self, ex, ones):
        pair = critical_pair("e", lambda_star_of_u("e", ones, ex), ones, ex)
        assert pair.degenerate and pair.t_plus == pair.t_minus

    def test_mpmath_reference(self, ex, ones):
        mex = (mp.mpf("1.5"), mp.mpf("1.75"), mp.mpf(3))
        tp, tm = mp_oracle.critical_pair("n", mp.mpf("0.1"), (1, 1, 1, 1), mex)
        pn = critical_pair("n", 0.1, ones, ex)
        assert float(tp) == pytest.approx(pn.t_plus, rel=1e-12)
        assert float(tm) == pytest.approx(pn.t_minus, rel=1e-12)


class TestConstants:
    def test_ratio_value(self, ex):
        assert lambda_star_ratio(ex) == pytest.approx(1.0886621079036347, rel=1e-15)

    def test_printed_constant_disagrees(self, ex, ones):
        # (2-q) raised to (2-q)/(gamma-q) instead of (2-q)/(gamma-2)
        q, al, g = ex.q, ex.alpha, ex.gamma
        r, s = (2 - q) / (g - 2), (g - q) / (g - 2)
        printed = (q * g**r / 2**s) * ((2 - al)**s * (2 - q)**((2 - q) / (g - q)) * (g - 2)) / (
            (al - q) * (g - al)**r * (g - q)**s)
        const = FiberConstants.from_exponents(ex)
        assert printed == pytest.approx(0.1774768329877785, rel=1e-12)
        assert const.c_e == pytest.approx(LAMBDA_STAR_E, rel=1e-13)

    def test_override_changes_closed_form(self, ex, ones):
        const = FiberConstants.from_exponents(ex)
        from dataclasses import replace
        bad = replace(const, c_e=0.17)
        assert lambda_star_closed_form("e", ones, ex, bad) == pytest.approx(0.17)


class TestInflection:
    def test_worked_value(self, ex, ones):
        r = inflection_root(0.1, ones, ex)
        assert r == pytest.approx(0.025554625487093405, rel=1e-11)
        assert rayleigh_n_d2(r * 0.999, 0.1, ones, ex) > 0 > rayleigh_n_d2(r * 1.001, 0.1, ones, ex)

    def test_regime_required(self, ones):
        with pytest.raises(UnsupportedRegimeError):
            inflection_root(0.01, ones, Exponents(1.5, 1.75, 2.7))

    def test_regime_edge(self, ones):
        ex = Exponents(1.5, 1.75, 2.75 + 1e-9)
        lam = 0.5 * lambda_star_of_u("n", ones, ex)
        r = inflection_root(lam, ones, ex)
        pn = critical_pair("n", lam, ones, ex)
        assert pn.t_plus < r < pn.t_minus

    def test_requires_pair(self, ex, ones):
        with pytest.raises(DomainError):
            inflection_root(0.5, ones, ex)


class TestBisect:
    def test_unbracketed(self):
        with pytest.raises(BracketError) as info:
            bisect_root(lambda t: t - 5.0, 1.0, 2.0)
        assert info.value.diagnostics["f_lo"] == -4.0

    def test_relative_tolerance_on_tiny_root(self):
        root = bisect_root(lambda t: t - 1e-20, 1e-30, 1.0, tol=1e-12)
        assert root == pytest.approx(1e-20, rel=1e-12)

    def test_exact_endpoint(self):
        assert bisect_root(lambda t: t - 1.0, 1.0, 2.0) == 1.0


class TestAnalyze:
    def test_fields(self, ex, ones):
        fa = analyze_fiber(0.1, ones, ex)
        assert fa.mu_e_minus == pytest.approx(MU_REF[2], abs=1e-12)
        assert fa.inflection_r is not None

    def test_quotient_partials_finite_difference(self, ex, ones):
        h = 1e-6
        for which in ("lambda_star_e", "lambda_star_n", "mu_e_plus", "mu_e_minus", "mu_n_plus", "mu_n_minus"):
            val, partials, _ = quotient_value_and_partials(which, 0.1, ones, ex)
            for i in range(4):
                up = [1.0] * 4
                dn = [1.0] * 4
                up[i] += h
                dn[i] -= h
                fd = (quotient_value_and_partials(which, 0.1, NormTuple(*up), ex)[0]
                      - quotient_value_and_partials(which, 0.1, NormTuple(*dn), ex)[0]) / (2 * h)
                assert partials[i] == pytest.approx(fd, rel=1e-6, abs=1e-8), (which, i)


@settings(max_examples=60, deadline=None)
@given(ex=exponents, nt=tuples, frac=st.floats(0.01, 0.95))
def test_ordering_chain(ex, nt, frac):
    lam = frac * lambda_star_of_u("e", nt, ex)
    pe, pn = critical_pair("e", lam, nt, ex), critical_pair("n", lam, nt, ex)
    chain = [pn.t_plus, pe.t_plus, t_star("e", nt, ex), pn.t_minus, pe.t_minus]
    assert all(x < y for x, y in zip(chain, chain[1:]))
    assert mu_quotients(lam, nt, ex).ordered()


@settings(max_examples=60, deadline=None)
@given(ex=exponents, nt=tuples, k=st.floats(0.1, 10.0))
def test_homogeneity(ex, nt, k):
    # quotient values along the fiber of k*u are those of u at t*k
    ks = nt.scaled(k, ex)
    assert lambda_star_of_u("e", ks, ex) == pytest.approx(lambda_star_of_u("e", nt, ex), rel=1e-11)
    assert t_star("n", ks, ex) * k == pytest.approx(t_star("n", nt, ex), rel=1e-11)
    t = 0.37 * t_star("e", nt, ex)
    assert rayleigh_n(t / k, 0.01, ks, ex) == pytest.approx(rayleigh_n(t, 0.01, nt, ex), rel=1e-11)


@settings(max_examples=60, deadline=None)
@given(ex=exponents, nt=tuples, frac=st.floats(0.05, 0.9), pos=st.floats(0.05, 0.95))
def test_roots_solve_level_and_energy_derivative(ex, nt, frac, pos):
    lam = frac * lambda_star_of_u("n", nt, ex)
    m = mu_quotients(lam, nt, ex)
    assume(m.n_minus - m.n_plus > 1e-9 * abs(m.n_minus))
    mu = m.n_plus + pos * (m.n_minus - m.n_plus)
    r = nehari_roots(lam, mu, nt, ex)
    assert r.count == 3
    for s in r.roots:
        scale = s * nt.a + lam * s**(ex.q - 1) * nt.b + abs(mu) * s**(ex.alpha - 1) * nt.c + s**(ex.gamma - 1) * nt.d
        assert abs(phi_d1(s, lam, mu, nt, ex)) <= 1e-9 * scale
    assert rayleigh_n_d1(r.s0, lam, nt, ex) < 0 < rayleigh_n_d1(r.s1, lam, nt, ex)
    assert rayleigh_n_d1(r.s2, lam, nt, ex) < 0


@settings(max_examples=40, deadline=None)
@given(ex=exponents, nt=tuples)
def test_fibers_meet_only_at_t_star(ex, nt):
    te = t_star("e", nt, ex)
    assert lambda_fiber("e", te, nt, ex) == pytest.approx(lambda_fiber("n", te, nt, ex), rel=1e-10)
    # the difference changes sign exactly once, from - to +
    assert lambda_fiber("e", 0.5 * te, nt, ex) < lambda_fiber("n", 0.5 * te, nt, ex)
    assert lambda_fiber("e", 2.0 * te, nt, ex) > lambda_fiber("n", 2.0 * te, nt, ex)


def test_rayleigh_e_equals_n_at_e_critical(ex, ones):
    pe = critical_pair("e", 0.1, ones, ex)
    for t in pe:
        if isinstance(t, float):
            assert rayleigh_e(t, 0.1, ones, ex) == pytest.approx(rayleigh_n(t, 0.1, ones, ex), rel=1e-11)
