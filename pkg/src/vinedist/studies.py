"""Simulation-study presets at configurable scale.

Three harnesses: the rejection-rate curve of the simplifying-assumption
test over a grid of tau slopes, the model-selection ranking comparison
(distance-to-independence vs AIC/BIC), and truncation-level recovery on
truncated t-vine data. Each returns plot-ready rows; the CLI writes
them as CSV.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .bicop import BivariateCopula, tau_to_param
from .boottest import test_simplifying
from .estimators import make_estimator
from .fit import FitConfig, fit_dissmann
from .nonsimplified import NonSimplifiedModel, TauFunction
from .rng import substream
from .rvine import RVineModel, random_correlation, truncate
from .selection import noise_to_signal, score_models
from .structure import TreeEdge, dvine_structure, matrix_from_trees
from .truncation import optimal_truncation_global, optimal_truncation_sequential
from .fit import vine_from_correlation


def clayton_tau_vine(a, b, tau12=0.7, tau23=0.5):
    """The 3-d Clayton vine with tau_{1,3;2}(u2) = a + (b - a) u2.

    Negative tau(u2) values switch the conditional edge to the
    90-degree rotated Clayton.
    """
    structure = dvine_structure([1, 2, 3])
    tree1 = {(0, 2): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, tau12)),
             (1, 2): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, tau23))}
    cond = {(0, 1): ("clayton", TauFunction(a, b, 2), None)}
    return NonSimplifiedModel(structure, tree1, cond)


def clayton_vine_template(tau12=0.7, tau23=0.5, tau13_2=0.3):
    """Simplified counterpart carrying the true structure and families."""
    structure = dvine_structure([1, 2, 3])
    pcs = {(0, 2): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, tau12)),
           (1, 2): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, tau23)),
           (0, 1): BivariateCopula("clayton", 0, tau_to_param("clayton", 0, abs(tau13_2) or 0.3))}
    return RVineModel(structure, pcs)


def power_curve(a=0.3, b_values=None, n=500, p=250, m=100, alpha=0.05,
                seed=0, threads=1, progress=None):
    """Rejection rates of the simplifying test over a grid of slopes b.

    Structure and families are fixed to the true ones, as in the power
    study this mirrors. Returns one row per b: (b, n, p, rejections,
    rate, seconds).
    """
    if b_values is None:
        b_values = [round(-1.0 + 0.1 * i, 1) for i in range(21)]
    template = clayton_vine_template()
    rows = []
    for b in b_values:
        generator = clayton_tau_vine(a, float(b))
        rejections = 0
        t0 = time.time()
        for rep in range(p):
            data = generator.sample(n, substream(seed, "power", b, "gen", rep))
            result = test_simplifying(data, m=m, alpha=alpha, template=template,
                                      rng=substream(seed, "power", b, "test", rep),
                                      threads=threads)
            rejections += int(result.reject)
        rows.append({"b": float(b), "n": n, "p": p, "rejections": rejections,
                     "rate": rejections / p, "seconds": round(time.time() - t0, 2)})
        if progress:
            progress(rows[-1])
    return rows


def mixed_vine_5d():
    """A 5-d R-vine with mixed families and strong lower trees.

    Same tree structure and tau magnitudes as the selection study it
    mirrors, with every family drawn from the supported set.
    """
    trees = [
        [TreeEdge(1, 5, frozenset()), TreeEdge(2, 4, frozenset()),
         TreeEdge(3, 4, frozenset()), TreeEdge(4, 5, frozenset())],
        [TreeEdge(1, 4, frozenset({5})), TreeEdge(2, 5, frozenset({4})),
         TreeEdge(3, 5, frozenset({4}))],
        [TreeEdge(1, 3, frozenset({4, 5})), TreeEdge(2, 3, frozenset({4, 5}))],
        [TreeEdge(1, 2, frozenset({3, 4, 5}))],
    ]
    structure = matrix_from_trees(trees)
    spec = {
        (1, 5): ("gumbel", 0.60, None), (2, 4): ("clayton", 0.83, None),
        (3, 4): ("joe", 0.74, None), (4, 5): ("gumbel", 0.72, None),
        (1, 4): ("clayton", 0.50, None), (2, 5): ("joe", 0.45, None),
        (3, 5): ("frank", 0.48, None),
        (1, 3): ("t", -0.19, 3.0), (2, 3): ("frank", -0.31, None),
        (1, 2): ("gaussian", -0.13, None),
    }
    pcs = {}
    from .structure import slot_of_edge
    for tree_edges in trees:
        for edge in tree_edges:
            family, tau, nu = spec[(edge.a, edge.b)]
            rotation = 0
            if family in ("clayton", "gumbel", "joe") and tau < 0:
                rotation = 90
            params = tau_to_param(family, rotation, tau, nu=nu)
            col, row, flipped = slot_of_edge(structure, edge)
            if flipped and rotation in (90, 270):
                rotation = 360 - rotation
            pcs[(col, row)] = BivariateCopula(family, rotation, params)
    return RVineModel(structure, pcs)


SELECTION_CANDIDATES = ("gaussian", "cvine", "dvine", "rvine")


def selection_study(reps=100, n=3000, candidates=SELECTION_CANDIDATES,
                    true_model=None, seed=0, progress=None):
    """Fit candidate classes to samples of a known vine and compare the
    distance-to-independence ranking against AIC/BIC."""
    true_model = true_model or mixed_vine_5d()
    tables = []
    agreements = 0
    gaussian_first = 0
    for rep in range(reps):
        data = true_model.sample(n, substream(seed, "select", "gen", rep))
        cands = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for name in candidates:
                est = make_estimator(name).fit(data)
                cands.append((name, est.model_, est.n_params_))
        table = score_models(data, cands)
        tables.append(table)
        agreements += int(table.rankings["dist_independence"] == table.rankings["aic"])
        gaussian_first += int(table.rankings["dist_independence"][0] == "gaussian")
        if progress:
            progress({"rep": rep, "ranking": table.rankings["dist_independence"]})
    summary = {
        "reps": reps, "n": n,
        "ranking_agreement_dkl_aic": agreements,
        "gaussian_ranked_first": gaussian_first,
        "noise_to_signal": noise_to_signal(tables) if reps >= 2 else None,
    }
    means = {}
    for i, name in enumerate(candidates):
        means[name] = {
            "n_params": float(np.mean([t.rows[i].n_params for t in tables])),
            "dist_independence": float(np.mean([t.rows[i].dist_independence for t in tables])),
            "aic": float(np.mean([t.rows[i].aic for t in tables])),
            "bic": float(np.mean([t.rows[i].bic for t in tables])),
        }
    summary["means"] = means
    return summary, tables


def truncated_tvine(d, true_level, nu, rng):
    """A d-dimensional t copula as a D-vine, truncated at ``true_level``."""
    corr = random_correlation(d, rng)
    full = vine_from_correlation(corr, nu=nu)
    return truncate(full, true_level)


def truncation_study(d=8, true_level=4, nu=3.0, n=2000, runs=10, m=100,
                     alpha=0.05, familyset=("gaussian",), seed=0, threads=1,
                     progress=None):
    """Recovery of a known truncation level by both algorithms."""
    rows = []
    for run in range(runs):
        model = truncated_tvine(d, true_level, nu, substream(seed, "trunc", "corr", run))
        data = model.sample(n, substream(seed, "trunc", "gen", run))
        t0 = time.time()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            glob = optimal_truncation_global(
                data, alpha=alpha, m=m, familyset=familyset,
                rng=substream(seed, "trunc", "glob", run), threads=threads)
            seq = optimal_truncation_sequential(
                data, alpha=alpha, m=m, familyset=familyset,
                rng=substream(seed, "trunc", "seq", run), threads=threads)
        rows.append({"run": run, "true_level": true_level,
                     "k_global": glob.k_star, "k_sequential": seq.k_star,
                     "seconds": round(time.time() - t0, 2)})
        if progress:
            progress(rows[-1])
    return rows
