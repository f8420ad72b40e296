"""Optimal truncation level of a fitted vine.

Two procedures, both using the single-diagonal KL and the parametric
bootstrap for significance. The global one fits the full vine once and
scans truncation levels from deep to shallow until truncating becomes
significant; the sequential one grows the vine tree by tree and stops
at the first tree that adds nothing significant.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .bicop import as_generator
from .boottest import _jitter_sort, _order_statistic_rank, parallel_map
from .distance import sdkl
from .fit import DataError, FitConfig, fit_dissmann, refit_parameters
from .rvine import truncate


@dataclass(frozen=True)
class TruncationLevel:
    k: int
    distance: float
    ci_upper: float
    significant: bool


@dataclass(frozen=True)
class TruncationTrace:
    algorithm: str
    levels: tuple
    k_star: int
    alpha: float
    m: int
    seed: object = None

    def to_dict(self):
        return {"algorithm": self.algorithm, "k_star": self.k_star,
                "alpha": self.alpha, "M": self.m, "seed": self.seed,
                "levels": [vars(l).copy() for l in self.levels]}


def _boot_ci(h0_model, refit_template, level, n, m, alpha, rng, threads, fast,
             config, sequential=False):
    """Upper CI bound of the null sdKL distribution at one level.

    Samples from the truncated null model, refits (parameters only when
    ``fast``), and compares the refitted pair at the same truncation.
    """
    streams = rng.spawn(m)

    def one(j):
        sample = h0_model.sample(n, streams[j])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if fast:
                refit = refit_parameters(sample, refit_template)
            else:
                refit = fit_dissmann(sample, config)
        if sequential:
            return float(sdkl(truncate(refit, level - 1), truncate(refit, level)).value)
        return float(sdkl(refit, truncate(refit, level)).value)

    boot = _jitter_sort(parallel_map(one, range(m), threads))
    return float(boot[_order_statistic_rank(m, alpha) - 1])


def optimal_truncation_global(data, alpha=0.05, m=100, familyset=None, rng=None,
                              threads=1, fast=True, config=None):
    """Backward scan: truncate the full fit until the distance to the
    full model turns significant; k* is one level above that."""
    data = np.asarray(data, dtype=float)
    d = data.shape[1]
    if d < 3:
        raise DataError("truncation search needs d >= 3")
    rng = as_generator(rng)
    config = config or FitConfig(familyset=tuple(familyset) if familyset
                                 else FitConfig().familyset)
    full = fit_dissmann(data, config)
    levels = []
    k_star = 0
    for level in range(d - 2, -1, -1):
        trunc = truncate(full, level)
        dist = float(sdkl(full, trunc).value)
        ci = _boot_ci(trunc, full, level, data.shape[0], m, alpha,
                      rng.spawn(1)[0], threads, fast, config)
        significant = dist > ci
        levels.append(TruncationLevel(level, dist, ci, significant))
        if significant:
            k_star = level + 1
            break
    return TruncationTrace("global", tuple(levels), k_star, alpha, m)


def optimal_truncation_sequential(data, alpha=0.05, m=100, familyset=None,
                                  rng=None, threads=1, fast=True, config=None):
    """Forward scan: extend the vine tree by tree, stopping at the first
    tree whose contribution is insignificant; k* is the previous level."""
    data = np.asarray(data, dtype=float)
    d = data.shape[1]
    if d < 3:
        raise DataError("truncation search needs d >= 3")
    rng = as_generator(rng)
    config = config or FitConfig(familyset=tuple(familyset) if familyset
                                 else FitConfig().familyset)
    # tree selection is sequential, so the m-truncated fit is the full
    # fit's truncation: lower-tree estimates are frozen on extension
    full = fit_dissmann(data, config)
    levels = []
    k_star = d - 1
    for level in range(1, d):
        prev = truncate(full, level - 1)
        curr = truncate(full, level)
        dist = float(sdkl(prev, curr).value)
        ci = _boot_ci(prev, curr, level, data.shape[0], m, alpha,
                      rng.spawn(1)[0], threads, fast, config, sequential=True)
        significant = dist > ci
        levels.append(TruncationLevel(level, dist, ci, significant))
        if not significant:
            k_star = level - 1
            break
    return TruncationTrace("sequential", tuple(levels), k_star, alpha, m)


def emit_trace(trace: TruncationTrace, path):
    """Write the per-level curve (k, distance, ci_upper) as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "distance", "ci_upper", "significant"])
        for lvl in trace.levels:
            writer.writerow([lvl.k, repr(lvl.distance), repr(lvl.ci_upper),
                             int(lvl.significant)])
