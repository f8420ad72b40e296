"""Sequential vine estimation: consistency, tree optimality, copula classes."""

import itertools
import warnings

import numpy as np
import pytest
from scipy import special, stats

from vinedist.bicop import BivariateCopula, empirical_tau, tau_to_param
from vinedist.fit import (DataError, FitConfig, fit_dissmann, fit_gaussian_copula,
                          fit_t_copula, partial_correlation, refit_parameters,
                          tau_correlation_matrix, vine_from_correlation)
from vinedist.rvine import RVineModel, random_correlation
from vinedist.structure import RVineStructure, dvine_structure


def clayton_vine():
    s = dvine_structure([1, 2, 3])
    return RVineModel(s, {
        (0, 2): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, 0.7)),
        (1, 2): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, 0.5)),
        (0, 1): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, 0.3))}), s


class TestDissmann:
    def test_fixed_structure_recovers_taus(self):
        true, s = clayton_vine()
        data = true.sample(1000, np.random.default_rng(21))
        fit = fit_dissmann(data, FitConfig(structure=s, familyset=("clayton",)))
        want = {frozenset({1, 2}): 0.7, frozenset({2, 3}): 0.5, frozenset({1, 3}): 0.3}
        for slot, cop in fit.pair_copulas.items():
            pair = frozenset(fit.structure.cond_pair(*slot))
            assert cop.tau == pytest.approx(want[pair], abs=0.05)

    def test_independent_data_all_independence(self):
        data = np.random.default_rng(22).random((1500, 4))
        fit = fit_dissmann(data)
        assert all(c.family == "indep" for c in fit.pair_copulas.values())

    def test_gaussian_partial_correlation_oracle(self):
        R = np.array([[1.0, 0.5, 0.3, 0.1], [0.5, 1.0, 0.4, 0.2],
                      [0.3, 0.4, 1.0, 0.45], [0.1, 0.2, 0.45, 1.0]])
        true = vine_from_correlation(R)
        data = true.sample(4000, np.random.default_rng(23))
        fit = fit_dissmann(data, FitConfig(familyset=("gaussian",)))
        R_hat = tau_correlation_matrix(data)
        for slot, cop in fit.pair_copulas.items():
            if cop.family == "indep":
                continue
            a, b = fit.structure.cond_pair(*slot)
            cond = [int(x) - 1 for x in fit.structure.conditioning(*slot)]
            want = partial_correlation(R_hat, a - 1, b - 1, cond)
            assert cop.parameters[0] == pytest.approx(want, abs=0.05)

    def test_tree1_is_maximum_spanning_tree(self):
        # brute force over all labeled spanning trees at d=5 (Pruefer)
        d = 5
        R = random_correlation(d, np.random.default_rng(24))
        data = vine_from_correlation(R).sample(800, np.random.default_rng(25))
        fit = fit_dissmann(data)
        taus = {(i, j): abs(empirical_tau(data[:, i], data[:, j]))
                for i in range(d) for j in range(i + 1, d)}
        tree1 = [tuple(sorted(x - 1 for x in fit.structure.cond_pair(c, d - 1)))
                 for c in range(d - 1)]
        got = sum(taus[e] for e in tree1)
        best = 0.0
        for pruefer in itertools.product(range(d), repeat=d - 2):
            edges = _pruefer_to_tree(list(pruefer), d)
            best = max(best, sum(taus[e] for e in edges))
        assert got == pytest.approx(best, abs=1e-12)

    def test_degenerate_data_rejected(self):
        data = np.random.default_rng(26).random((100, 3))
        data[:, 1] = 0.5
        with pytest.raises(DataError):
            fit_dissmann(data)

    def test_truncated_fit(self):
        R = random_correlation(5, np.random.default_rng(27))
        data = vine_from_correlation(R).sample(900, np.random.default_rng(28))
        fit = fit_dissmann(data, FitConfig(familyset=("gaussian",), truncation_level=2))
        assert fit.truncation_level == 2
        for slot, cop in fit.pair_copulas.items():
            if fit.structure.tree_of(*slot) > 2:
                assert cop.family == "indep"

    def test_structure_classes(self):
        R = random_correlation(4, np.random.default_rng(29))
        data = vine_from_correlation(R).sample(700, np.random.default_rng(30))
        cv = fit_dissmann(data, FitConfig(familyset=("gaussian",), structure_class="cvine"))
        # C-vine: one root in tree 1 adjacent to all others
        tree1 = [cv.structure.cond_pair(c, 3) for c in range(3)]
        counts = {}
        for a, b in tree1:
            counts[a] = counts.get(a, 0) + 1
            counts[b] = counts.get(b, 0) + 1
        assert max(counts.values()) == 3
        dv = fit_dissmann(data, FitConfig(familyset=("gaussian",), structure_class="dvine"))
        tree1 = [dv.structure.cond_pair(c, 3) for c in range(3)]
        counts = {}
        for a, b in tree1:
            counts[a] = counts.get(a, 0) + 1
            counts[b] = counts.get(b, 0) + 1
        assert max(counts.values()) <= 2

    def test_refit_parameters_keeps_shape(self):
        true, s = clayton_vine()
        data = true.sample(600, np.random.default_rng(31))
        fit = fit_dissmann(data, FitConfig(structure=s, familyset=("clayton",)))
        data2 = true.sample(600, np.random.default_rng(32))
        refit = refit_parameters(data2, fit)
        assert refit.structure == fit.structure
        for slot in fit.pair_copulas:
            assert refit.pair_copulas[slot].family == fit.pair_copulas[slot].family
            assert refit.pair_copulas[slot].rotation == fit.pair_copulas[slot].rotation

    def test_fitted_model_is_valid(self):
        R = random_correlation(5, np.random.default_rng(33))
        data = vine_from_correlation(R, nu=6.0).sample(800, np.random.default_rng(34))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = fit_dissmann(data)
        RVineStructure(fit.structure.matrix)  # revalidates all conditions
        assert fit.n_params >= 0
        assert np.isfinite(fit.loglik(data))


def _pruefer_to_tree(seq, d):
    degree = [1] * d
    for x in seq:
        degree[x] += 1
    edges = []
    seq = list(seq)
    leaves = sorted(i for i in range(d) if degree[i] == 1)
    for x in seq:
        leaf = leaves.pop(0)
        edges.append(tuple(sorted((leaf, x))))
        degree[x] -= 1
        if degree[x] == 1:
            import bisect
            bisect.insort(leaves, x)
    edges.append(tuple(sorted(leaves[:2])))
    return edges


class TestCopulaClasses:
    def test_gaussian_fit_matches_direct_density(self):
        R = np.array([[1.0, 0.55, 0.25], [0.55, 1.0, 0.35], [0.25, 0.35, 1.0]])
        data = vine_from_correlation(R).sample(4000, np.random.default_rng(35))
        fit = fit_gaussian_copula(data)
        R_hat = tau_correlation_matrix(data)
        pts = np.random.default_rng(36).random((100, 3))
        x = special.ndtri(pts)
        want = (stats.multivariate_normal(np.zeros(3), R_hat).logpdf(x)
                - stats.norm.logpdf(x).sum(axis=1))
        assert np.abs(fit.logdensity(pts) - want).max() < 1e-6

    def test_t_copula_nu_recovery(self):
        R = np.array([[1.0, 0.5, 0.3], [0.5, 1.0, 0.2], [0.3, 0.2, 1.0]])
        x = stats.multivariate_t(np.zeros(3), R, df=3).rvs(3000, random_state=37)
        data = stats.t(df=3).cdf(x)
        fit = fit_t_copula(data)
        nus = [c.parameters[1] for c in fit.pair_copulas.values()
               if fit.structure.tree_of(0, 2) == 1]
        base_nu = min(c.parameters[1] for c in fit.pair_copulas.values())
        assert 2.5 <= base_nu <= 3.6
        # tree-m edges carry nu + (m-1)
        for slot, cop in fit.pair_copulas.items():
            tree = fit.structure.tree_of(*slot)
            assert cop.parameters[1] == pytest.approx(base_nu + tree - 1, abs=1e-9)

    def test_equicorrelated_zero(self):
        data = np.random.default_rng(38).random((3000, 3))
        fit = fit_gaussian_copula(data)
        for cop in fit.pair_copulas.values():
            assert abs(cop.parameters[0]) < 0.05
