"""Scikit-learn style estimators wrapping the vine fitters.

The fitted dependence model lives in ``model_`` (an immutable
RVineModel / NonSimplifiedModel); ``transform`` is the Rosenblatt
transform to independent uniforms and ``inverse_transform`` its
inverse, so a fitted estimator composes with pipelines that expect the
usual fit/transform surface. ``score`` follows the density-estimator
convention (mean log-likelihood per sample).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .bicop import as_generator
from .fit import DEFAULT_FAMILYSET, FitConfig, fit_dissmann, fit_gaussian_copula, fit_t_copula
from .nonsimplified import fit_nonsimplified
from .validation import check_copula_data


class VineCopulaEstimator(TransformerMixin, BaseEstimator):
    """Simplified vine copula estimator.

    Parameters
    ----------
    structure_class : str
        One of "rvine", "cvine", "dvine", "gaussian", "t". The last two
        estimate a Gaussian/t copula and represent it as its
        partial-correlation vine.
    familyset : sequence of str, optional
        Candidate pair-copula families (vine classes only).
    structure : RVineStructure, optional
        Fix the vine structure instead of selecting it.
    truncation_level : int, optional
        Fit only the first k trees; deeper trees become independence.
    """

    def __init__(self, structure_class="rvine", familyset=None, structure=None,
                 truncation_level=None):
        self.structure_class = structure_class
        self.familyset = familyset
        self.structure = structure
        self.truncation_level = truncation_level

    def _more_tags(self):
        return {"X_types": ["2darray"], "requires_y": False}

    def fit(self, X, y=None):
        X = check_copula_data(X, min_rows=30)
        kind = {"gaussian_copula": "gaussian", "t_copula": "t"}.get(
            self.structure_class, self.structure_class)
        if kind == "gaussian":
            self.model_ = fit_gaussian_copula(X)
            self.n_params_ = self.model_.n_params
        elif kind == "t":
            self.model_ = fit_t_copula(X)
            # one shared nu: per-edge counting would double-count it
            self.n_params_ = X.shape[1] * (X.shape[1] - 1) // 2 + 1
        else:
            config = FitConfig(
                familyset=tuple(self.familyset) if self.familyset else DEFAULT_FAMILYSET,
                structure=self.structure,
                structure_class=self.structure_class,
                truncation_level=self.truncation_level)
            self.model_ = fit_dissmann(X, config)
            self.n_params_ = self.model_.n_params
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before using this estimator")

    def transform(self, X):
        """Rosenblatt transform: copula-scale data to independent uniforms."""
        self._check_fitted()
        X = check_copula_data(X, d=self.n_features_in_)
        return self.model_.rosenblatt(X)

    def inverse_transform(self, W):
        self._check_fitted()
        W = check_copula_data(W, d=self.n_features_in_)
        return self.model_.inverse_rosenblatt(W)

    def sample(self, n, random_state=None):
        self._check_fitted()
        return self.model_.sample(n, as_generator(random_state))

    def log_likelihood(self, X):
        self._check_fitted()
        return self.model_.loglik(check_copula_data(X, d=self.n_features_in_))

    def score_samples(self, X):
        self._check_fitted()
        return self.model_.logdensity(check_copula_data(X, d=self.n_features_in_))

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))

    def aic(self, X):
        return -2.0 * self.log_likelihood(X) + 2.0 * self.n_params_

    def bic(self, X):
        X = check_copula_data(X, d=self.n_features_in_)
        return -2.0 * self.model_.loglik(X) + np.log(X.shape[0]) * self.n_params_


class NonSimplifiedVineEstimator(TransformerMixin, BaseEstimator):
    """Vine estimator whose conditional edges carry linear tau functions.

    Structure and pair-copula families come from a simplified pilot fit
    (or a supplied template model); the tau endpoints of every
    conditional edge are then estimated by maximum likelihood.
    """

    def __init__(self, familyset=None, structure=None, template=None):
        self.familyset = familyset
        self.structure = structure
        self.template = template

    def fit(self, X, y=None):
        X = check_copula_data(X, min_rows=30)
        template = self.template
        if template is None:
            config = FitConfig(
                familyset=tuple(self.familyset) if self.familyset else DEFAULT_FAMILYSET,
                structure=self.structure)
            template = fit_dissmann(X, config)
        self.template_ = template
        self.model_ = fit_nonsimplified(X, template)
        self.n_params_ = self.model_.n_params
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before using this estimator")

    def transform(self, X):
        self._check_fitted()
        return self.model_.rosenblatt(check_copula_data(X, d=self.n_features_in_))

    def inverse_transform(self, W):
        self._check_fitted()
        return self.model_.inverse_rosenblatt(check_copula_data(W, d=self.n_features_in_))

    def sample(self, n, random_state=None):
        self._check_fitted()
        return self.model_.sample(n, as_generator(random_state))

    def log_likelihood(self, X):
        self._check_fitted()
        return self.model_.loglik(check_copula_data(X, d=self.n_features_in_))

    def score_samples(self, X):
        self._check_fitted()
        return self.model_.logdensity(check_copula_data(X, d=self.n_features_in_))

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))


ESTIMATOR_CLASSES = {
    "gaussian": (VineCopulaEstimator, {"structure_class": "gaussian"}),
    "tcopula": (VineCopulaEstimator, {"structure_class": "t"}),
    "cvine": (VineCopulaEstimator, {"structure_class": "cvine"}),
    "dvine": (VineCopulaEstimator, {"structure_class": "dvine"}),
    "rvine": (VineCopulaEstimator, {"structure_class": "rvine"}),
    "tvine": (VineCopulaEstimator, {"structure_class": "rvine",
                                    "familyset": ("t",)}),
    "nonsimplified": (NonSimplifiedVineEstimator, {}),
}


def make_estimator(name, **kwargs):
    """Instantiate the estimator of a named model class."""
    if name not in ESTIMATOR_CLASSES:
        raise ValueError(f"unknown model class {name!r}; choose from "
                         f"{sorted(ESTIMATOR_CLASSES)}")
    cls, fixed = ESTIMATOR_CLASSES[name]
    return cls(**{**fixed, **kwargs})


def make_class_fitter(name, **kwargs):
    """Callable data -> fitted model for a named model class (the
    bootstrap-test interface)."""

    def fitter(data):
        return make_estimator(name, **kwargs).fit(data).model_

    return fitter
