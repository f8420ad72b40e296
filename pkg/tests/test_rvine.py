"""R-vine model evaluation against closed-form multivariate oracles."""

import numpy as np
import pytest
from scipy import special, stats

from vinedist.bicop import BivariateCopula, empirical_tau, tau_to_param
from vinedist.rvine import (RVineModel, conditional_cdf, conditional_density,
                            independence_vine, random_correlation, truncate)
from vinedist.fit import fit_dissmann, partial_correlation, vine_from_correlation
from vinedist.structure import cvine_structure, dvine_structure


@pytest.fixture
def gauss3():
    R = np.array([[1.0, 0.6, 0.25], [0.6, 1.0, -0.4], [0.25, -0.4, 1.0]])
    return vine_from_correlation(R), R


def trivariate_gaussian_logcopula(u, R):
    x = special.ndtri(u)
    mvn = stats.multivariate_normal(mean=np.zeros(R.shape[0]), cov=R)
    return mvn.logpdf(x) - stats.norm.logpdf(x).sum(axis=1)


def trivariate_t_logcopula(u, R, nu):
    x = special.stdtrit(nu, u)
    mvt = stats.multivariate_t(loc=np.zeros(R.shape[0]), shape=R, df=nu)
    return mvt.logpdf(x) - stats.t(df=nu).logpdf(x).sum(axis=1)


def grid_points(d, n=5, lo=0.12, hi=0.88):
    axes = [np.linspace(lo, hi, n)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


class TestDensity:
    def test_independence_model_density_one(self):
        m = independence_vine(4)
        pts = np.random.default_rng(0).random((50, 4))
        assert np.allclose(m.density(pts), 1.0)

    def test_gaussian_vine_equals_trivariate_copula(self, gauss3):
        model, R = gauss3
        pts = grid_points(3)
        assert np.abs(model.logdensity(pts)
                      - trivariate_gaussian_logcopula(pts, R)).max() < 1e-8

    def test_t_vine_equals_trivariate_t_copula(self, gauss3):
        _, R = gauss3
        nu = 5.0
        model = vine_from_correlation(R, nu=nu)
        pts = grid_points(3)
        got = np.exp(model.logdensity(pts))
        want = np.exp(trivariate_t_logcopula(pts, R, nu))
        assert np.abs(got - want).max() < 1e-6

    def test_logdensity_is_edge_sum(self):
        # brute-force recomputation: sum the pair log densities with
        # arguments rebuilt by explicit h-chains, independent of the engine
        s = dvine_structure([1, 2, 3, 4])
        rng = np.random.default_rng(1)
        pcs = {}
        for col, row in s.slots():
            tau = float(rng.uniform(0.2, 0.6))
            pcs[(col, row)] = BivariateCopula("frank", 0, tau_to_param("frank", 0, tau))
        m = RVineModel(s, pcs)
        u = rng.random((20, 4))
        u1, u2, u3, u4 = u.T
        c12 = pcs[(0, 3)] if s.cond_pair(0, 3) == (1, 2) else None
        # structure is the 1-2-3-4 D-vine: look slots up by conditioned pair
        by_pair = {frozenset(s.cond_pair(c, r)): (c, r) for c, r in s.slots()}
        cop = lambda *vars_: pcs[by_pair[frozenset(vars_)]]
        lp = (cop(1, 2).logpdf(u1, u2) + cop(2, 3).logpdf(u2, u3)
              + cop(3, 4).logpdf(u3, u4))
        c1g2 = cop(1, 2).hfunc("second", u1, u2)
        c3g2 = cop(2, 3).hfunc("first", u2, u3)
        c2g3 = cop(2, 3).hfunc("second", u2, u3)
        c4g3 = cop(3, 4).hfunc("first", u3, u4)
        lp = lp + cop(1, 3).logpdf(c1g2, c3g2) + cop(2, 4).logpdf(c2g3, c4g3)
        c1g23 = cop(1, 3).hfunc("second", c1g2, c3g2)
        c4g23 = cop(2, 4).hfunc("first", c2g3, c4g3)
        lp = lp + cop(1, 4).logpdf(c1g23, c4g23)
        assert np.abs(m.logdensity(u) - lp).max() < 1e-10


class TestSampling:
    def test_independence_sample_uniform(self):
        m = independence_vine(3)
        u = m.sample(10000, np.random.default_rng(2))
        assert stats.kstest(u[:, 0], "uniform").pvalue > 0.01
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(empirical_tau(u[:, i], u[:, j])) < 0.02

    def test_clayton_vine_taus(self):
        s = dvine_structure([1, 2, 3])
        m = RVineModel(s, {
            (0, 2): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, 0.7)),
            (1, 2): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, 0.5)),
            (0, 1): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, 0.3))})
        u = m.sample(10000, np.random.default_rng(3))
        assert empirical_tau(u[:, 0], u[:, 1]) == pytest.approx(0.7, abs=0.02)
        assert empirical_tau(u[:, 1], u[:, 2]) == pytest.approx(0.5, abs=0.02)

    def test_seed_determinism(self, gauss3):
        model, _ = gauss3
        a = model.sample(64, np.random.default_rng(7))
        b = model.sample(64, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_sample_refit_recovers_tau_matrix(self, gauss3):
        model, R = gauss3
        u = model.sample(10000, np.random.default_rng(4))
        refit = fit_dissmann(u, min_rows=30)
        v = refit.sample(10000, np.random.default_rng(5))
        for i in range(3):
            for j in range(i + 1, 3):
                assert empirical_tau(v[:, i], v[:, j]) == pytest.approx(
                    empirical_tau(u[:, i], u[:, j]), abs=0.03)


class TestRosenblatt:
    def test_independence_is_identity(self):
        m = independence_vine(3)
        u = np.random.default_rng(6).random((40, 3))
        assert np.allclose(m.rosenblatt(u), u)
        assert np.allclose(m.inverse_rosenblatt(u), u)

    def test_round_trip(self, gauss3):
        model, _ = gauss3
        u = 0.04 + 0.92 * np.random.default_rng(8).random((200, 3))
        w = model.rosenblatt(u)
        assert np.abs(model.inverse_rosenblatt(w) - u).max() < 1e-8
        w2 = 0.04 + 0.92 * np.random.default_rng(9).random((200, 3))
        assert np.abs(model.rosenblatt(model.inverse_rosenblatt(w2)) - w2).max() < 1e-8

    def test_gaussian_2d_closed_form(self):
        rho = 0.5
        s = dvine_structure([1, 2])
        m = RVineModel(s, {(0, 1): BivariateCopula("gaussian", 0, (rho,))})
        w = np.random.default_rng(10).random((100, 2))
        u = m.inverse_rosenblatt(w)
        x2 = special.ndtri(u[:, 1])
        x1 = special.ndtri(w[:, 0]) * np.sqrt(1 - rho ** 2) + rho * x2
        assert np.abs(u[:, 0] - special.ndtr(x1)).max() < 1e-8
        assert np.allclose(u[:, 1], w[:, 1])


class TestConditionals:
    def test_independence(self):
        m = independence_vine(4)
        assert conditional_density(m, 2, 0.3, [0.5, 0.6]) == pytest.approx(1.0)
        assert conditional_cdf(m, 2, 0.3, [0.5, 0.6]) == pytest.approx(0.3)

    def test_normalization_random_5d(self):
        rng = np.random.default_rng(11)
        nodes, weights = np.polynomial.legendre.leggauss(65)
        t = 0.5 + 0.5 * nodes
        w65 = 0.5 * weights
        for _ in range(3):
            R = random_correlation(5, rng)
            m = vine_from_correlation(R)
            for j in (1, 2, 4):
                # interior conditioning values: at the edges of the cube the
                # conditional needles outresolve a 65-node rule
                rest = 0.15 + 0.7 * rng.random(5 - j)
                dens = conditional_density(m, j, t, rest)
                assert float(np.sum(w65 * dens)) == pytest.approx(1.0, abs=1e-4)

    def test_gaussian_2d_analytic(self):
        rho = 0.5
        s = dvine_structure([1, 2])
        m = RVineModel(s, {(0, 1): BivariateCopula("gaussian", 0, (rho,))})
        cop = m.pair_copulas[(0, 1)]
        t = np.linspace(0.05, 0.95, 19)
        got = conditional_density(m, 1, t, [0.7])
        want = cop.pdf(t, np.full_like(t, 0.7))
        assert np.abs(got - want).max() < 1e-8
        got_cdf = conditional_cdf(m, 1, t, [0.7])
        want_cdf = cop.hfunc("second", t, np.full_like(t, 0.7))
        assert np.abs(got_cdf - want_cdf).max() < 1e-8

    def test_cdf_derivative_matches_density(self, gauss3):
        model, _ = gauss3
        rest = [0.4, 0.7]
        h = 1e-4
        for t in (0.3, 0.5, 0.8):
            fd = (conditional_cdf(model, 1, t + h, rest)
                  - conditional_cdf(model, 1, t - h, rest)) / (2 * h)
            assert fd == pytest.approx(conditional_density(model, 1, t, rest), abs=1e-4)

    def test_cdf_increasing(self, gauss3):
        model, _ = gauss3
        t = np.linspace(0.05, 0.95, 30)
        vals = conditional_cdf(model, 1, t, [0.4, 0.7])
        assert np.all(np.diff(vals) > 0)

    def test_telescoping_product_equals_density(self, gauss3):
        model, _ = gauss3
        rng = np.random.default_rng(12)
        pts = rng.random((30, 3))
        diag = model.order
        prod = np.ones(30)
        for j in range(1, 3):
            uj = pts[:, diag[j - 1] - 1]
            rest = np.column_stack([pts[:, diag[p] - 1] for p in range(j, 3)])
            from vinedist.rvine import _conditional_grid
            vals = np.array([_conditional_grid(model, j, uj[i:i + 1], rest[i:i + 1],
                                               "density")[0, 0] for i in range(30)])
            prod *= vals
        assert np.abs(prod - model.density(pts)).max() < 1e-8


class TestSubModel:
    def test_level_zero_identity(self, gauss3):
        model, _ = gauss3
        assert model.sub_model(0) is model

    def test_gaussian_margin(self, gauss3):
        model, R = gauss3
        sub = model.sub_model(1)
        assert sub.d == 2
        # the margin on the last two diagonal variables is the bivariate
        # gaussian copula with their plain correlation
        diag = model.order
        i, j = diag[1] - 1, diag[2] - 1
        rho = R[i, j]
        pts = np.random.default_rng(13).random((40, 2))
        want = BivariateCopula("gaussian", 0, (rho,)).logpdf(pts[:, 0], pts[:, 1])
        assert np.abs(sub.logdensity(pts) - want).max() < 1e-10

    def test_margin_integrates_full_density(self, gauss3):
        # integrate the removed coordinate by quadrature
        model, _ = gauss3
        sub = model.sub_model(1)
        diag = model.order
        nodes, weights = np.polynomial.legendre.leggauss(64)
        t = 0.5 + 0.5 * nodes
        w = 0.5 * weights
        for pair in ([0.3, 0.6], [0.7, 0.2]):
            pts = np.empty((64, 3))
            pts[:, diag[0] - 1] = t
            pts[:, diag[1] - 1] = pair[0]
            pts[:, diag[2] - 1] = pair[1]
            integral = float(np.sum(w * model.density(pts)))
            assert integral == pytest.approx(float(sub.density([pair])[0]), abs=1e-3)


class TestTruncate:
    def test_full_level_identity(self, gauss3):
        model, _ = gauss3
        t = truncate(model, model.d - 1)
        pts = np.random.default_rng(14).random((20, 3))
        assert np.array_equal(t.logdensity(pts), model.logdensity(pts))

    def test_zero_level_independence(self, gauss3):
        model, _ = gauss3
        t = truncate(model, 0)
        pts = np.random.default_rng(15).random((20, 3))
        assert np.allclose(t.density(pts), 1.0)

    def test_parameter_count_bookkeeping(self):
        R = random_correlation(5, np.random.default_rng(16))
        m = vine_from_correlation(R)
        for k in range(5):
            t = truncate(m, k)
            per_tree = [5 - tree for tree in range(1, k + 1)]
            assert t.n_params == sum(per_tree)

    def test_idempotent(self, gauss3):
        model, _ = gauss3
        once = truncate(model, 1)
        twice = truncate(once, 1)
        assert once.pair_copulas == twice.pair_copulas
        assert once.truncation_level == twice.truncation_level

    def test_slot_above_truncation_must_be_independence(self, gauss3):
        model, _ = gauss3
        with pytest.raises(ValueError):
            RVineModel(model.structure, model.pair_copulas, 1)


class TestRandomCorrelation:
    def test_positive_definite(self):
        rng = np.random.default_rng(17)
        for d in (2, 3, 5, 8):
            R = random_correlation(d, rng)
            assert np.allclose(np.diag(R), 1.0)
            assert np.allclose(R, R.T)
            assert np.linalg.eigvalsh(R).min() > 0

    def test_2d_symmetric_around_zero(self):
        rng = np.random.default_rng(18)
        vals = [random_correlation(2, rng)[0, 1] for _ in range(10000)]
        assert abs(np.mean(vals)) < 0.02

    def test_3d_determinant_positive(self):
        rng = np.random.default_rng(19)
        assert all(np.linalg.det(random_correlation(3, rng)) > 0 for _ in range(200))
