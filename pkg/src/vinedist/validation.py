"""Input validation helpers for copula-scale data."""

from __future__ import annotations

import numpy as np


class CopulaDataError(ValueError):
    """Data is not valid copula-scale input."""


def check_copula_data(x, min_rows=1, d=None, name="data"):
    """Validate an N x d matrix of copula-scale observations.

    Values must be finite and strictly inside (0, 1); violations are
    reported with their row and column so CSV problems are actionable.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise CopulaDataError(f"{name} must be 2-dimensional, got shape {x.shape}")
    n, cols = x.shape
    if d is not None and cols != d:
        raise CopulaDataError(f"{name} must have {d} columns, got {cols}")
    if n < min_rows:
        raise CopulaDataError(f"{name} needs at least {min_rows} rows, got {n}")
    bad = ~np.isfinite(x)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise CopulaDataError(f"{name} has a non-finite value at row {r}, column {c}")
    bad = (x <= 0.0) | (x >= 1.0)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise CopulaDataError(
            f"{name} value {x[r, c]!r} at row {r}, column {c} is outside the "
            "open interval (0, 1); transform to the copula scale first")
    return x


def to_pseudo_observations(x):
    """Rank-transform arbitrary continuous data to the copula scale."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    ranks = np.argsort(np.argsort(x, axis=0), axis=0) + 1.0
    return ranks / (n + 1.0)
