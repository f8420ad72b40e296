"""Vine copula modeling with fast Kullback-Leibler model distances.

Provides parametric bivariate copulas, R-vine models (density,
simulation, conditionals, truncation), sequential vine estimation,
vines with conditionally varying pair-copulas, the dKL/sdKL distance
approximations, a parametric-bootstrap test for nested model classes,
distance-based model selection, and truncation-level determination.
"""

from .bicop import (BivariateCopula, BoundaryFitWarning, INDEPENDENCE, ParameterError,
                    empirical_tau, fit_mle, param_to_tau, select_family, tau_to_param)
from .boottest import (BootstrapTestResult, adequacy_check, auto_m_bootstrap_test,
                       bootstrap_test, test_simplifying)
from .distance import (DiagonalGrid, DimensionError, DistanceReport, build_diagonals,
                       distance_to_independence, dkl, kl_monte_carlo, kl_numeric,
                       kl_univariate, principal_diagonal, sdkl)
from .estimators import (NonSimplifiedVineEstimator, VineCopulaEstimator,
                         make_class_fitter, make_estimator)
from .fit import (DataError, FitConfig, fit_dissmann, fit_gaussian_copula, fit_t_copula,
                  gaussian_copula_model, refit_parameters, t_copula_model,
                  vine_from_correlation)
from .nonsimplified import (NonSimplifiedModel, TauFunction, fit_nonsimplified,
                            from_simplified, ns_density, ns_sample, tau_band)
from .rvine import (RVineModel, conditional_cdf, conditional_density, independence_vine,
                    random_correlation, truncate)
from .selection import ScoreTable, noise_to_signal, score_models
from .serialize import load_csv, load_model, save_csv, save_model
from .structure import RVineStructure, StructureError, cvine_structure, dvine_structure
from .truncation import (TruncationTrace, emit_trace, optimal_truncation_global,
                         optimal_truncation_sequential)
from .validation import CopulaDataError, check_copula_data, to_pseudo_observations

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
