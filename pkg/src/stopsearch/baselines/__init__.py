"""Comparison methods: model-based fitting and Bayesian optimization."""

from .bo import BoConfig, BoResult, bo_re_search, bo_search
from .gp import GpNumericError, GpSurrogate, expected_improvement
from .hmm_fit import FittedBkt, bkt_log_likelihood, fit_bkt_mle
from .model_based import DomainTemplate, fit_afm, model_based_policy

__all__ = [
    "BoConfig",
    "BoResult",
    "bo_re_search",
    "bo_search",
    "GpNumericError",
    "GpSurrogate",
    "expected_improvement",
    "FittedBkt",
    "bkt_log_likelihood",
    "fit_bkt_mle",
    "DomainTemplate",
    "fit_afm",
    "model_based_policy",
]
