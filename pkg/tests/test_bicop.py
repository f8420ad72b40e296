"""Bivariate copula engine tests against independent oracles.

Oracles: finite differences of closed-form CDFs, Monte Carlo
concordance estimates of Kendall's tau, and dense-grid inversion for
the numeric h-inverses.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_

from vinedist.bicop import (INDEPENDENCE, BivariateCopula, BoundaryFitWarning,
                            ParameterError, empirical_tau, fit_mle, param_to_tau,
                            select_family, tau_to_param)

ALL_FAMILIES = [
    BivariateCopula("gaussian", 0, (0.5,)),
    BivariateCopula("t", 0, (0.5, 4.0)),
    BivariateCopula("clayton", 0, (2.0,)),
    BivariateCopula("gumbel", 0, (2.5,)),
    BivariateCopula("frank", 0, (4.0,)),
    BivariateCopula("joe", 0, (2.0,)),
]

ROTATED = [
    BivariateCopula("clayton", 90, (2.0,)),
    BivariateCopula("gumbel", 180, (2.5,)),
    BivariateCopula("joe", 270, (2.0,)),
]


def fd_pdf_from_cdf(cop, u, v, h=1e-5):
    """2-D central finite difference of the CDF."""
    return (cop.cdf(u + h, v + h) - cop.cdf(u + h, v - h)
            - cop.cdf(u - h, v + h) + cop.cdf(u - h, v - h)) / (4.0 * h * h)


def fd_hfunc_from_cdf(cop, u, v, h=1e-6):
    """Numeric dC/du."""
    return (cop.cdf(u + h, v) - cop.cdf(u - h, v)) / (2.0 * h)


def mc_tau(cop, n=40000, seed=0):
    data = cop.sample(n, np.random.default_rng(seed))
    return empirical_tau(data[:, 0], data[:, 1])


class TestPdf:
    def test_independence_constant(self):
        assert INDEPENDENCE.pdf(0.3, 0.7) == pytest.approx(1.0)

    def test_gaussian_zero_correlation(self):
        cop = BivariateCopula("gaussian", 0, (0.0,))
        assert cop.pdf(0.5, 0.5) == pytest.approx(1.0)

    def test_clayton_matches_cdf_finite_difference(self):
        cop = BivariateCopula("clayton", 0, (2.0,))
        assert cop.pdf(0.5, 0.5) == pytest.approx(fd_pdf_from_cdf(cop, 0.5, 0.5), abs=1e-6)

    @pytest.mark.parametrize("cop", [c for c in ALL_FAMILIES + ROTATED
                                     if c.family not in ("gaussian", "t")])
    def test_pdf_matches_cdf_finite_difference_grid(self, cop):
        pts = [0.25, 0.5, 0.75]
        for u in pts:
            for v in pts:
                assert cop.pdf(u, v) == pytest.approx(
                    fd_pdf_from_cdf(cop, u, v), rel=1e-4, abs=1e-6)

    @pytest.mark.parametrize("cop", ALL_FAMILIES)
    def test_integrates_to_one_mild_dependence(self, cop):
        # 21x21 tensor Gauss-Legendre; mild parameters keep the corner
        # singularities integrable at this resolution
        mild = {"gaussian": (0.3,), "t": (0.3, 6.0), "clayton": (0.6,),
                "gumbel": (1.3,), "frank": (2.0,), "joe": (1.3,)}
        cop = BivariateCopula(cop.family, 0, mild[cop.family])
        x, w = np.polynomial.legendre.leggauss(21)
        nodes = 0.5 + 0.5 * x
        weights = 0.5 * w
        u, v = np.meshgrid(nodes, nodes, indexing="ij")
        total = float(np.sum(np.outer(weights, weights) * cop.pdf(u, v)))
        assert total == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("cop", [c for c in ALL_FAMILIES
                                     if c.family not in ("gaussian", "t")])
    def test_rectangle_mass_matches_cdf(self, cop):
        # sharper normalization check: quadrature over [a,b]^2 vs the
        # closed-form CDF rectangle mass, strong parameters included
        a, b = 0.05, 0.9
        x, gw = np.polynomial.legendre.leggauss(48)
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
        weights = 0.5 * (b - a) * gw
        u, v = np.meshgrid(nodes, nodes, indexing="ij")
        got = float(np.sum(np.outer(weights, weights) * cop.pdf(u, v)))
        want = float(cop.cdf(b, b) - cop.cdf(a, b) - cop.cdf(b, a) + cop.cdf(a, a))
        assert got == pytest.approx(want, abs=2e-6)

    def test_rotation_identities(self):
        base = BivariateCopula("clayton", 0, (2.0,))
        u, v = 0.3, 0.65
        assert BivariateCopula("clayton", 90, (2.0,)).pdf(u, v) == pytest.approx(
            base.pdf(v, 1 - u), rel=1e-12)
        assert BivariateCopula("clayton", 180, (2.0,)).pdf(u, v) == pytest.approx(
            base.pdf(1 - u, 1 - v), rel=1e-12)
        assert BivariateCopula("clayton", 270, (2.0,)).pdf(u, v) == pytest.approx(
            base.pdf(1 - v, u), rel=1e-12)

    def test_invalid_parameters_raise(self):
        with pytest.raises(ParameterError):
            BivariateCopula("gaussian", 0, (1.2,))
        with pytest.raises(ParameterError):
            BivariateCopula("clayton", 0, (-0.5,))
        with pytest.raises(ParameterError):
            BivariateCopula("t", 0, (0.5, 1.0))
        with pytest.raises(ParameterError):
            BivariateCopula("frank", 0, (0.0,))
        with pytest.raises(ParameterError):
            BivariateCopula("gaussian", 90, (0.5,))


class TestHFunctions:
    def test_independence(self):
        assert INDEPENDENCE.hfunc("first", 0.4, 0.8) == pytest.approx(0.8)

    def test_gaussian_median(self):
        cop = BivariateCopula("gaussian", 0, (0.5,))
        assert cop.hfunc("first", 0.5, 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_clayton_matches_numeric_derivative(self):
        cop = BivariateCopula("clayton", 0, (2.0,))
        got = cop.hfunc("first", 0.3, 0.6)
        assert got == pytest.approx(fd_hfunc_from_cdf(cop, 0.3, 0.6), abs=1e-6)

    @pytest.mark.parametrize("cop", ALL_FAMILIES + ROTATED)
    def test_nondecreasing_in_conditioned_argument(self, cop):
        v = np.linspace(0.02, 0.98, 49)
        for u in (0.15, 0.5, 0.85):
            h = cop.hfunc("first", u, v)
            assert np.all(np.diff(h) >= -1e-12)
            assert np.all((h > 0) & (h < 1))

    def test_hinv_independence(self):
        assert INDEPENDENCE.hinv("first", 0.25, 0.9) == pytest.approx(0.25)

    @pytest.mark.parametrize("cop", ALL_FAMILIES + ROTATED)
    @pytest.mark.parametrize("which", ["first", "second"])
    def test_hinv_round_trip_grid(self, cop, which):
        grid = np.linspace(0.04, 0.96, 21)
        w, u = np.meshgrid(grid, grid, indexing="ij")
        if which == "first":
            v = cop.hinv("first", w, u)
            back = cop.hfunc("first", u, v)
        else:
            x = cop.hinv("second", w, u)
            back = cop.hfunc("second", x, u)
        assert np.abs(back - w).max() < 1e-8

    def test_gumbel_hinv_matches_dense_grid_inversion(self):
        cop = BivariateCopula("gumbel", 0, (2.5,))
        u, w = 0.5, 0.5
        vs = np.linspace(1e-6, 1 - 1e-6, 400001)
        hs = cop.hfunc("first", u, vs)
        v_grid = float(np.interp(w, hs, vs))
        v_star = float(cop.hinv("first", w, u))
        assert cop.hfunc("first", u, v_star) == pytest.approx(w, abs=1e-8)
        assert v_star == pytest.approx(v_grid, abs=1e-5)


class TestTauMaps:
    def test_gaussian_zero(self):
        assert tau_to_param("gaussian", 0, 0.0) == (0.0,)

    def test_clayton_half(self):
        theta = tau_to_param("clayton", 0, 0.5)[0]
        assert theta == pytest.approx(2.0)
        assert mc_tau(BivariateCopula("clayton", 0, (theta,))) == pytest.approx(0.5, abs=0.01)

    def test_gumbel_point_six(self):
        theta = tau_to_param("gumbel", 0, 0.6)[0]
        assert theta == pytest.approx(2.5)
        assert mc_tau(BivariateCopula("gumbel", 0, (theta,))) == pytest.approx(0.6, abs=0.01)

    def test_independence_tau(self):
        assert param_to_tau(INDEPENDENCE) == 0.0

    def test_t_tau_is_arcsin_of_rho(self):
        cop = BivariateCopula("t", 0, (0.70, 8.0))
        assert param_to_tau(cop) == pytest.approx(2 / np.pi * np.arcsin(0.70), abs=1e-12)
        assert param_to_tau(cop) == pytest.approx(0.494, abs=5e-4)
        assert mc_tau(cop) == pytest.approx(param_to_tau(cop), abs=0.01)

    def test_clayton_rotation_90(self):
        cop = BivariateCopula("clayton", 90, (2.0,))
        assert param_to_tau(cop) == pytest.approx(-0.5)
        assert mc_tau(cop) == pytest.approx(-0.5, abs=0.01)

    def test_sign_incompatible_raises(self):
        with pytest.raises(ValueError):
            tau_to_param("clayton", 0, -0.3)
        with pytest.raises(ValueError):
            tau_to_param("gumbel", 90, 0.3)

    @pytest.mark.parametrize("family,taus", [
        ("gaussian", np.linspace(-0.9, 0.9, 13)),
        ("clayton", np.linspace(0.05, 0.9, 10)),
        ("gumbel", np.linspace(0.0, 0.9, 10)),
        ("frank", [t for t in np.linspace(-0.85, 0.85, 11) if abs(t) > 1e-3]),
        ("joe", np.linspace(0.05, 0.9, 10)),
    ])
    def test_round_trip_identity(self, family, taus):
        for tau in taus:
            params = tau_to_param(family, 0, float(tau),
                                  nu=5.0 if family == "t" else None)
            cop = BivariateCopula(family, 0, params)
            assert param_to_tau(cop) == pytest.approx(float(tau), abs=1e-6)

    @given(tau=st_.floats(-0.85, 0.85))
    @settings(max_examples=40, deadline=None)
    def test_frank_round_trip_property(self, tau):
        if abs(tau) < 1e-3:
            return
        theta = tau_to_param("frank", 0, tau)[0]
        assert param_to_tau(BivariateCopula("frank", 0, (theta,))) == pytest.approx(
            tau, abs=1e-6)


class TestFitting:
    def test_clayton_consistency(self):
        true = BivariateCopula("clayton", 0, (2.0,))
        data = true.sample(5000, np.random.default_rng(3))
        fit = fit_mle(data, "clayton", 0)
        assert 1.8 <= fit.parameters[0] <= 2.2

    def test_independence_null(self):
        rng = np.random.default_rng(4)
        data = rng.random((5000, 2))
        for family in ("gaussian", "frank"):
            fit = fit_mle(data, family, 0)
            assert abs(fit.tau) < 0.03

    def test_gaussian_consistency(self):
        true = BivariateCopula("gaussian", 0, (0.9,))
        data = true.sample(5000, np.random.default_rng(5))
        fit = fit_mle(data, "gaussian", 0)
        assert 0.89 <= fit.parameters[0] <= 0.91

    def test_loglik_at_least_seed(self):
        rng = np.random.default_rng(6)
        for family in ("clayton", "gumbel", "frank", "joe", "gaussian"):
            true = BivariateCopula(family, 0, tau_to_param(family, 0, 0.4))
            data = true.sample(400, rng)
            fit = fit_mle(data, family, 0)
            seed_cop = BivariateCopula(
                family, 0, tau_to_param(family, 0, empirical_tau(data[:, 0], data[:, 1])))
            assert fit.loglik(data) >= seed_cop.loglik(data) - 1e-9

    def test_small_sample_rejected(self):
        with pytest.raises(ValueError):
            fit_mle(np.random.default_rng(0).random((10, 2)), "gaussian", 0)

    def test_t_profile_recovers_nu(self):
        true = BivariateCopula("t", 0, (0.5, 4.0))
        data = true.sample(4000, np.random.default_rng(7))
        fit = fit_mle(data, "t", 0)
        assert 2.5 <= fit.parameters[1] <= 7.0
        assert fit.parameters[0] == pytest.approx(0.5, abs=0.05)


class TestSelectFamily:
    def test_gumbel_selected(self):
        true = BivariateCopula("gumbel", 0, (2.0,))
        hits = 0
        for seed in range(10):
            data = true.sample(3000, np.random.default_rng(100 + seed))
            if select_family(data).family == "gumbel":
                hits += 1
        assert hits >= 9

    def test_independence_selected_on_noise(self):
        data = np.random.default_rng(8).random((3000, 2))
        assert select_family(data).family == "indep"

    def test_negative_tau_with_clayton_only(self):
        true = BivariateCopula("gaussian", 0, (-0.6,))
        data = true.sample(2000, np.random.default_rng(9))
        chosen = select_family(data, familyset=("clayton",))
        assert chosen.family == "clayton"
        assert chosen.rotation in (90, 270)


class TestSampling:
    def test_independence_tau(self):
        data = INDEPENDENCE.sample(10000, np.random.default_rng(10))
        assert abs(empirical_tau(data[:, 0], data[:, 1])) < 0.02

    def test_clayton_tau(self):
        data = BivariateCopula("clayton", 0, (2.0,)).sample(
            10000, np.random.default_rng(11))
        assert empirical_tau(data[:, 0], data[:, 1]) == pytest.approx(0.5, abs=0.02)

    def test_seed_determinism(self):
        cop = BivariateCopula("gumbel", 0, (2.0,))
        a = cop.sample(100, np.random.default_rng(12))
        b = cop.sample(100, np.random.default_rng(12))
        assert np.array_equal(a, b)
