"""Distance-based model selection scoring.

A fitted model's distance to the independence copula serves as a proxy
for its fit quality (under the true model it approximates the expected
log-likelihood), reported next to log-likelihood, AIC and BIC with the
per-criterion rankings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import distance_to_independence


@dataclass(frozen=True)
class ScoredModel:
    name: str
    n_params: int
    dist_independence: float
    loglik: float
    aic: float
    bic: float


@dataclass(frozen=True)
class ScoreTable:
    rows: tuple
    rankings: dict  # criterion -> tuple of model names, best first

    def to_dict(self):
        return {"models": [vars(r).copy() for r in self.rows],
                "rankings": {k: list(v) for k, v in self.rankings.items()}}

    def format(self):
        header = f"{'model':<16}{'params':>8}{'dist_indep':>12}{'loglik':>14}{'aic':>14}{'bic':>14}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(f"{r.name:<16}{r.n_params:>8}{r.dist_independence:>12.4f}"
                         f"{r.loglik:>14.2f}{r.aic:>14.2f}{r.bic:>14.2f}")
        for crit, order in self.rankings.items():
            lines.append(f"ranking by {crit}: " + " > ".join(order))
        return "\n".join(lines)


def _rank(names, values, descending):
    order = np.argsort(values, kind="stable")
    if descending:
        order = order[::-1]
    return tuple(names[i] for i in order)


def score_models(data, candidates, eps=0.025, n_grid=10):
    """Score fitted candidate models on one data set.

    ``candidates``: list of (name, model) or (name, model, n_params)
    triples; the parameter-count override covers models whose edge
    parameters are tied (a t copula's single nu, say).
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    rows = []
    for cand in candidates:
        if len(cand) == 2:
            name, model = cand
            n_params = model.n_params
        else:
            name, model, n_params = cand
        if model.d != data.shape[1]:
            raise ValueError(f"candidate {name!r} dimension mismatch")
        loglik = model.loglik(data)
        dist = distance_to_independence(model, eps=eps, n=n_grid).value
        rows.append(ScoredModel(name, int(n_params), float(dist), loglik,
                                -2.0 * loglik + 2.0 * n_params,
                                -2.0 * loglik + np.log(n) * n_params))
    names = [r.name for r in rows]
    rankings = {
        "dist_independence": _rank(names, [r.dist_independence for r in rows], True),
        "loglik": _rank(names, [r.loglik for r in rows], True),
        "aic": _rank(names, [r.aic for r in rows], False),
        "bic": _rank(names, [r.bic for r in rows], False),
    }
    return ScoreTable(tuple(rows), rankings)


def noise_to_signal(tables):
    """Std-error / |mean| of each criterion per model over repetitions.

    Means of zero give an infinity sentinel. ``tables`` is a sequence of
    ScoreTable from repeated fits of the same candidates.
    """
    if len(tables) < 2:
        raise ValueError("need at least 2 repetitions")
    names = [r.name for r in tables[0].rows]
    out = {}
    for i, name in enumerate(names):
        per_crit = {}
        for crit in ("dist_independence", "loglik", "aic", "bic"):
            attr = {"dist_independence": "dist_independence", "loglik": "loglik",
                    "aic": "aic", "bic": "bic"}[crit]
            vals = np.array([getattr(t.rows[i], attr) for t in tables], dtype=float)
            mean = vals.mean()
            se = vals.std(ddof=1) / np.sqrt(len(vals))
            per_crit[crit] = float(se / abs(mean)) if mean != 0.0 else np.inf
        out[name] = per_crit
    return out
