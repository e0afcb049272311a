from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from bregmi.divergence import (
    GsbParams,
    HybridDensity,
    extended_bregman,
    gsb_divergence,
    gsb_integrand,
    mi_hybrid,
    phi_gsb,
    phi_itakura_saito,
)
from bregmi.errors import GridMismatch, LimitCase
from bregmi.kde import DensityGrid, trapezoid

GRID = np.linspace(0.0, 1.0, 201)


def random_density(rng, grid=GRID) -> DensityGrid:
    # Smooth positive bumps, normalized under the trapezoid rule.
    raw = np.exp(np.convolve(rng.normal(size=grid.size + 20), np.ones(21) / 21, "valid") * 3)
    return DensityGrid(grid, raw / trapezoid(raw, grid[1] - grid[0]))


def pd_direct(g, f, lam):
    """Power divergence in its textbook form, for lambda not in {0, -1}."""
    return trapezoid(g * ((g / f) ** lam - 1.0), GRID[1] - GRID[0]) / (lam * (1 + lam))


def dpd_direct(g, f, a):
    return trapezoid(f ** (1 + a) - (1 + 1 / a) * f**a * g + g ** (1 + a) / a, GRID[1] - GRID[0])


def shd_direct(g, f, a):
    return 2 / (1 + a) * trapezoid((g ** ((1 + a) / 2) - f ** ((1 + a) / 2)) ** 2, GRID[1] - GRID[0])


def exp_bregman_direct(g, f, beta):
    phi = np.exp(beta * g) - np.exp(beta * f) - (g - f) * beta * np.exp(beta * f)
    return trapezoid(phi, GRID[1] - GRID[0])


class TestParams:
    @settings(max_examples=200)
    @given(st.floats(-1, 3), st.floats(-5, 5), st.floats(-2, 2))
    def test_a_plus_b(self, a, lam, beta):
        p = GsbParams(a, lam, beta)
        assert p.A + p.B == pytest.approx(1 + a, abs=1e-12)
        assert p.k == p.A

    @pytest.mark.parametrize(
        "triple, family",
        [
            ((0, 0.5, 0), "PD"),
            ((0.5, 0.3, 0), "SDivergence"),
            ((0.5, 0, 0), "SDivergence"),
            ((1, 0, 0), "L2"),
            ((-1, 0, -0.05), "BED"),
            ((0.3, 0.2, -0.05), "GenericGSB"),
        ],
    )
    def test_family_tags(self, triple, family):
        assert GsbParams(*triple).family() == family

    def test_dpd_tag(self):
        assert GsbParams(0.4, 0, 0).is_dpd and not GsbParams(0.4, 0.1, 0).is_dpd

    def test_alpha_below_minus_one(self):
        with pytest.raises(ValueError):
            GsbParams(-1.5, 0, 0)


class TestGenerator:
    def test_hellinger_type_generator(self):
        # alpha=0, lambda=1: A=2, B=-1, phi(t) = 1 - t^(1/2).
        phi = phi_gsb(GsbParams(0, 1, 0))
        t = np.linspace(0.05, 3, 50)
        np.testing.assert_allclose(phi.evaluate(t), 1 - np.sqrt(t), rtol=1e-13)
        np.testing.assert_allclose(phi.d1(t), -0.5 / np.sqrt(t), rtol=1e-13)
        np.testing.assert_allclose(phi.d2(t), t ** (-1.5) / 4, rtol=1e-13)
        assert phi.index == 2.0

    def test_l2_generator(self):
        phi = phi_gsb(GsbParams(1, 0, 0))
        t = np.linspace(0, 3, 31)
        np.testing.assert_allclose(phi.evaluate(t), 1 + t**2, rtol=1e-14)
        np.testing.assert_allclose(phi.d2(t), 2.0)

    def test_limit_case_raises(self):
        with pytest.raises(LimitCase):
            phi_gsb(GsbParams(0.5, 1.0, 0))  # B = 0
        with pytest.raises(LimitCase):
            phi_gsb(GsbParams(0.5, -2.0, 0))  # A = 0

    @settings(max_examples=100)
    @given(st.floats(-0.9, 2), st.floats(-0.4, 1.5), st.floats(-1, 1))
    def test_strict_convexity(self, a, lam, beta):
        p = GsbParams(a, lam, beta)
        if p.A < 0.05 or abs(p.B) < 0.05:
            return
        t = np.linspace(1e-3, 2, 200)
        assert np.all(phi_gsb(p).d2(t) > 0)

    def test_derivatives_by_finite_difference(self):
        phi = phi_gsb(GsbParams(0.3, 0.4, -0.2))
        t = np.linspace(0.2, 2, 10)
        e = 1e-6
        np.testing.assert_allclose(phi.d1(t), (phi.evaluate(t + e) - phi.evaluate(t - e)) / (2 * e), rtol=1e-6)
        np.testing.assert_allclose(phi.d2(t), (phi.d1(t + e) - phi.d1(t - e)) / (2 * e), rtol=1e-5)


class TestExtendedBregman:
    def test_identity(self, rng):
        g = random_density(rng)
        assert extended_bregman(g, g, phi_gsb(GsbParams(0.5, 0.2, -0.1))) == pytest.approx(0, abs=1e-14)

    def test_positive_for_distinct(self, rng):
        g, f = random_density(rng), random_density(rng)
        assert extended_bregman(g, f, phi_gsb(GsbParams(0.5, 0.2, -0.1))) > 0
        assert extended_bregman(g, f, phi_itakura_saito()) > 0

    def test_grid_mismatch(self, rng):
        g = random_density(rng)
        f = DensityGrid(np.linspace(0, 2, 201), np.ones(201))
        with pytest.raises(GridMismatch):
            extended_bregman(g, f, phi_itakura_saito())
        with pytest.raises(GridMismatch):
            gsb_divergence(g, f, GsbParams(0.5, 0))

    def test_itakura_saito_against_quadrature(self):
        lo, hi = -4.0, 4.0
        gpdf = lambda y: norm.pdf(y, 0.3, 1.0)  # noqa: E731
        fpdf = lambda y: norm.pdf(y, 0.0, 1.2)  # noqa: E731

        def integrand(y):
            r = gpdf(y) / fpdf(y)
            return (r - math.log(r) - 1.0) / (2 * math.pi)

        oracle, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12)
        grid = np.linspace(lo, hi, 40001)
        g = DensityGrid(grid, gpdf(grid))
        f = DensityGrid(grid, fpdf(grid))
        assert extended_bregman(g, f, phi_itakura_saito(), k=1) == pytest.approx(oracle, rel=1e-7)


class TestGsbDivergence:
    def test_pd_direct_formula_lambda_one(self, rng):
        g, f = random_density(rng), random_density(rng)
        assert gsb_divergence(g, f, GsbParams(0, 1, 0)) == pytest.approx(pd_direct(g.values, f.values, 1.0), abs=1e-10)

    @pytest.mark.parametrize("lam", [-0.7, -0.5, -0.3, 0.25, 0.5, 1.0, 1.5, 2.0])
    def test_pd_direct_formula_many_pairs(self, lam):
        rng = np.random.default_rng(int(1000 * (lam + 1)))
        worst = 0.0
        for _ in range(100):
            g, f = random_density(rng), random_density(rng)
            worst = max(worst, abs(gsb_divergence(g, f, GsbParams(0, lam, 0)) - pd_direct(g.values, f.values, lam)))
        assert worst < 1e-8

    @pytest.mark.parametrize("a", [0.1, 0.25, 0.5, 1.0])
    def test_dpd_direct_formula(self, rng, a):
        g, f = random_density(rng), random_density(rng)
        assert gsb_divergence(g, f, GsbParams(a, 0, 0)) == pytest.approx(dpd_direct(g.values, f.values, a), abs=1e-10)

    @pytest.mark.parametrize("a", [0.0, 0.3, 0.7, 1.0])
    def test_s_hellinger_direct_formula(self, rng, a):
        g, f = random_density(rng), random_density(rng)
        assert gsb_divergence(g, f, GsbParams(a, -0.5, 0)) == pytest.approx(
            shd_direct(g.values, f.values, a), abs=1e-10
        )

    @pytest.mark.parametrize("beta", [-0.5, -0.05, 0.3])
    def test_scaled_bed_is_exponential_bregman(self, rng, beta):
        g, f = random_density(rng), random_density(rng)
        assert gsb_divergence(g, f, GsbParams(-1, 0, beta)) == pytest.approx(
            exp_bregman_direct(g.values, f.values, beta), abs=1e-12
        )

    @pytest.mark.parametrize("a, beta", [(0.3, 0.0), (0.3, -0.2), (0.8, 0.1), (-0.5, 0.0)])
    def test_continuity_across_a_zero(self, rng, a, beta):
        g, f = random_density(rng), random_density(rng)
        lam0 = -1.0 / (1.0 - a)
        limit = gsb_divergence(g, f, GsbParams(a, lam0, beta))
        for dA in (1e-6, -1e-6):
            p = GsbParams(a, (dA - 1.0) / (1.0 - a), beta)
            assert abs(p.A - dA) < 1e-12
            assert gsb_divergence(g, f, p) == pytest.approx(limit, rel=1e-3)

    @pytest.mark.parametrize("a, beta", [(0.3, 0.0), (0.3, -0.2), (0.6, 0.1), (-0.5, 0.0)])
    def test_continuity_across_b_zero(self, rng, a, beta):
        g, f = random_density(rng), random_density(rng)
        lam0 = a / (1.0 - a)
        limit = gsb_divergence(g, f, GsbParams(a, lam0, beta))
        for dB in (1e-6, -1e-6):
            p = GsbParams(a, (a - dB) / (1.0 - a), beta)
            assert abs(p.B - dB) < 1e-12
            assert gsb_divergence(g, f, p) == pytest.approx(limit, rel=1e-3)

    def test_a_tiny_uses_limit_form(self, rng):
        g, f = random_density(rng), random_density(rng)
        a = 0.4
        p = GsbParams(a, (1e-8 - 1.0) / (1.0 - a), 0)
        limit17 = trapezoid(
            f.values ** (1 + a) * np.log(f.values / g.values) - (f.values ** (1 + a) - g.values ** (1 + a)) / (1 + a),
            GRID[1] - GRID[0],
        )
        assert gsb_divergence(g, f, p) == pytest.approx(limit17, rel=1e-4)

    def test_double_limit_is_zero(self, rng):
        g, f = random_density(rng), random_density(rng)
        assert gsb_divergence(g, f, GsbParams(-1, -0.5, 0.0)) == 0.0

    def test_generic_formula_near_limit_agrees(self, rng):
        g, f = random_density(rng), random_density(rng)
        p = GsbParams(0.3, (1e-5 - 1) / 0.7, 0)
        direct = gsb_integrand(g.values, f.values, p, use_limits=False)
        limit = gsb_integrand(g.values, f.values, GsbParams(0.3, -1 / 0.7, 0))
        assert trapezoid(direct, 0.005) == pytest.approx(trapezoid(limit, 0.005), rel=1e-3)

    @settings(max_examples=120, deadline=None)
    @given(
        st.integers(0, 2**32 - 1),
        st.floats(-0.9, 1.5),
        st.floats(-0.45, 1.5),
        st.floats(-1.0, 1.0),
    )
    def test_nonnegative_and_identity(self, seed, a, lam, beta):
        p = GsbParams(a, lam, beta)
        rng = np.random.default_rng(seed)
        g, f = random_density(rng), random_density(rng)
        assert gsb_divergence(g, f, p) >= -1e-10
        assert abs(gsb_divergence(g, g, p)) < 1e-10

    def test_identity_of_indiscernibles_surrogate(self, rng):
        for _ in range(20):
            g, f = random_density(rng), random_density(rng)
            if np.max(np.abs(g.values - f.values)) > 0.05:
                assert gsb_divergence(g, f, GsbParams(0.5, 0.2, 0)) > 1e-6


def _transform(hd: HybridDensity, T, T_inv, dT, n_points=20001) -> HybridDensity:
    """Change of variables t = T(y) on a uniform t-grid."""
    lo, hi = T(hd.points[0]), T(hd.points[-1])
    t = np.linspace(lo, hi, n_points)
    y = T_inv(t)
    jac = 1.0 / dT(y)

    def push(values):
        return np.interp(y, hd.points, values) * jac

    base = DensityGrid(t, push(hd.joint[0].values))
    return HybridDensity.from_slices(hd.fx, base, base.with_values(push(hd.joint[1].values)))


class TestMutualInformation:
    def test_independence_gives_zero(self, small_normal_hd):
        for p in (GsbParams(0.5, 0), GsbParams(0, 0.5), GsbParams(0.3, 0.2, -0.05), GsbParams(-1, 0, 0.2)):
            assert abs(mi_hybrid(small_normal_hd, p)) < 1e-8

    def test_dependent_matches_quadrature(self, dependent_hd):
        a = 0.5

        def integrand(y):
            fy = 0.5 * (norm.pdf(y, -1) + norm.pdf(y, 1))
            total = 0.0
            for mu in (-1.0, 1.0):
                g, f = 0.5 * norm.pdf(y, mu), 0.5 * fy
                total += f ** (1 + a) - (1 + 1 / a) * f**a * g + g ** (1 + a) / a
            return total

        oracle, _ = integrate.quad(integrand, -10, 10, epsabs=1e-13, limit=200)
        value = mi_hybrid(dependent_hd, GsbParams(a, 0))
        assert value > 0
        assert value == pytest.approx(oracle, rel=1e-6)

    def test_label_swap(self, dependent_hd):
        for p in (GsbParams(0.5, 0), GsbParams(0.2, 0.7, -0.1)):
            assert mi_hybrid(dependent_hd.swapped(), p) == pytest.approx(mi_hybrid(dependent_hd, p), rel=1e-14)

    @pytest.mark.parametrize("lam", [-0.5, 0.5, 1.0])
    def test_monotone_transform_invariance_pd(self, dependent_hd, lam):
        ys = np.linspace(-12, 12, 200001)
        T = lambda y: y + y**3 / 10.0  # noqa: E731
        T_inv = lambda t: np.interp(t, T(ys), ys)  # noqa: E731
        dT = lambda y: 1.0 + 0.3 * y**2  # noqa: E731
        p = GsbParams(0, lam, 0)
        moved = _transform(dependent_hd, T, T_inv, dT, n_points=40001)
        assert mi_hybrid(moved, p) == pytest.approx(mi_hybrid(dependent_hd, p), rel=1e-3)

    def test_scale_changes_dpd_by_power(self, dependent_hd):
        # Outside the power-divergence line the density powers carry the
        # Jacobian, so y -> c y multiplies the value by c^(-alpha).
        c, a = 2.0, 0.5
        moved = _transform(dependent_hd, lambda y: c * y, lambda t: t / c, lambda y: c + 0 * y, n_points=4001)
        ratio = mi_hybrid(moved, GsbParams(a, 0)) / mi_hybrid(dependent_hd, GsbParams(a, 0))
        assert ratio == pytest.approx(c ** (-a), rel=1e-6)

    def test_hybrid_validation(self):
        g = DensityGrid(np.linspace(0, 1, 11), np.ones(11))
        with pytest.raises(ValueError):
            HybridDensity.product((0.4, 0.4), g)
        with pytest.raises(ValueError):
            HybridDensity.product((0.0, 1.0), g)
