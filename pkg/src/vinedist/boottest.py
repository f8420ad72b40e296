"""Parametric-bootstrap test for nested copula model classes.

The observed statistic is the distance between the parsimonious-class
fit and the richer-class fit. Its null distribution is estimated by
refitting both classes on M samples drawn from the parsimonious fit;
the null is rejected when the observed distance leaves the empirical
confidence interval [0, d_ceil(M(1-alpha))].
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .bicop import as_generator
from .distance import default_distance
from .fit import DataError, FitConfig, fit_dissmann, refit_parameters
from .nonsimplified import fit_nonsimplified


@dataclass(frozen=True)
class BootstrapTestResult:
    d0: float
    boot_distances: tuple
    ci_upper: float
    p_value: float
    reject: bool
    m_adequate: bool
    m: int
    alpha: float
    beta: float
    n: int
    seed: object = None
    n_failed: int = 0

    def to_dict(self):
        return {"d0": self.d0, "boot_distances": list(self.boot_distances),
                "ci_upper": self.ci_upper, "p_value": self.p_value,
                "reject": self.reject, "m_adequate": self.m_adequate,
                "M": self.m, "alpha": self.alpha, "beta": self.beta,
                "N": self.n, "seed": self.seed, "n_failed": self.n_failed}


def _order_statistic_rank(m, alpha):
    """1-based rank of the upper confidence bound: ceil(M(1-alpha))."""
    return int(np.ceil(m * (1.0 - alpha)))


def adequacy_check(boot_distances, d0, m, alpha, beta=0.01):
    """Is the bootstrap sample size large enough for a stable decision?

    Builds a 100(1-beta)% confidence interval for the ceil(M(1-alpha))th
    order statistic from the binomial distribution of order-statistic
    ranks over the empirical sample; the decision is stable in M iff d0
    falls outside that interval.
    """
    boot = np.sort(np.asarray(boot_distances, dtype=float))
    q = 1.0 - alpha
    lo_rank = int(stats.binom.ppf(beta / 2.0, m, q))
    hi_rank = int(stats.binom.ppf(1.0 - beta / 2.0, m, q)) + 1
    lo_rank = min(max(lo_rank, 1), m)
    hi_rank = min(max(hi_rank, 1), m)
    lo, hi = boot[lo_rank - 1], boot[hi_rank - 1]
    return not (lo <= d0 <= hi)


def _jitter_sort(values):
    """Strictly increasing order statistics: deterministic tie break."""
    values = np.sort(np.asarray(values, dtype=float))
    return values + 1e-15 * np.arange(1, values.size + 1)


def parallel_map(fn, items, threads=1):
    """Ordered map, optionally threaded; results identical either way."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def bootstrap_test(data, fit_f, fit_g, dist=None, m=100, alpha=0.05, beta=0.01,
                   rng=None, threads=1, max_failure_rate=0.05):
    """Generic parametric-bootstrap test of nested model classes.

    ``fit_f``/``fit_g`` are callables data -> model for the nested and
    the richer class (nesting is the caller's responsibility). ``dist``
    defaults to dkl below dimension 10 and sdkl from 10 on. A replicate
    whose fit fails is resampled once, then counted as failed; more than
    ``max_failure_rate`` failures aborts.
    """
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    rng = as_generator(rng)
    if dist is None:
        dist = default_distance(d)
    model_f = fit_f(data)
    model_g = fit_g(data)
    d0 = float(dist(model_f, model_g).value)
    streams = rng.spawn(2 * m)

    def one_replicate(j):
        for attempt in range(2):
            stream = streams[2 * j + attempt]
            sample = model_f.sample(n, stream)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    f_j = fit_f(sample)
                    g_j = fit_g(sample)
                    return float(dist(f_j, g_j).value)
            except (DataError, np.linalg.LinAlgError, ValueError):
                continue
        return None

    results = parallel_map(one_replicate, range(m), threads)
    boot = [r for r in results if r is not None]
    n_failed = m - len(boot)
    if n_failed > max_failure_rate * m:
        raise RuntimeError(
            f"{n_failed}/{m} bootstrap replicates failed to fit; the null fit "
            "is likely degenerate (inspect the fitted f-class model)")
    boot = _jitter_sort(boot)
    m_eff = boot.size
    ci_upper = float(boot[_order_statistic_rank(m_eff, alpha) - 1])
    p_value = float((1 + np.sum(boot >= d0)) / (m_eff + 1))
    reject = bool(d0 > ci_upper)
    adequate = adequacy_check(boot, d0, m_eff, alpha, beta)
    return BootstrapTestResult(d0, tuple(boot.tolist()), ci_upper, p_value, reject,
                               adequate, m_eff, alpha, beta, n, None, n_failed)


def auto_m_bootstrap_test(data, fit_f, fit_g, dist=None, m=100, alpha=0.05,
                          beta=0.01, rng=None, threads=1, max_m=800):
    """Double M (up to ``max_m``) until the adequacy check passes."""
    rng = as_generator(rng)
    while True:
        result = bootstrap_test(data, fit_f, fit_g, dist, m, alpha, beta,
                                rng.spawn(1)[0], threads)
        if result.m_adequate or m >= max_m:
            return result
        m *= 2


def test_simplifying(data, m=100, alpha=0.05, beta=0.01, familyset=None,
                     structure=None, template=None, rng=None, threads=1,
                     protocol="fixed", dist=None):
    """Bootstrap test of the simplifying assumption.

    The nested class is the simplified vines, the richer class the
    vines with linear-tau conditional edges. Under ``protocol="fixed"``
    (the default) structure and families are selected once on the data,
    or taken from ``template`` (a simplified model carrying the known
    structure and families), and held fixed across all bootstrap refits;
    ``protocol="reselect"`` re-runs structure and family selection in
    every replicate.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] < 3:
        raise DataError("testing the simplifying assumption needs d >= 3 "
                        "(no conditional edge exists below)")
    if protocol not in ("fixed", "reselect"):
        raise ValueError("protocol must be 'fixed' or 'reselect'")
    config = FitConfig(familyset=tuple(familyset) if familyset else
                       FitConfig().familyset, structure=structure)
    if template is None:
        template = fit_dissmann(data, config)

    if protocol == "fixed":
        def fit_f(sample):
            return refit_parameters(sample, template)

        def fit_g(sample):
            return fit_nonsimplified(sample, refit_parameters(sample, template))
    else:
        def fit_f(sample):
            return fit_dissmann(sample, config)

        def fit_g(sample):
            return fit_nonsimplified(sample, fit_dissmann(sample, config))

    return bootstrap_test(data, fit_f, fit_g, dist, m, alpha, beta, rng, threads)
