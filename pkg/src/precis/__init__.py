"""Estimation of the diagonal of a sparse Gaussian precision matrix."""

__version__ = "0.1.0"

from .core import cholesky, sample_covariance, sample_gaussian
from .estimators import (
    PmlConfig,
    assemble_precision,
    estimate,
    estimate_pml,
    estimate_rml,
    estimate_rv,
    estimate_sml,
    partial_correlations,
)
from .graph import build_graph, default_threshold
from .models import PrecisionModel, build_model
from .regression import SqrtLassoConfig, ols_refit, sqrt_lasso_all, sqrt_lasso_column

__all__ = [
    "PmlConfig",
    "PrecisionModel",
    "SqrtLassoConfig",
    "assemble_precision",
    "build_graph",
    "build_model",
    "cholesky",
    "default_threshold",
    "estimate",
    "estimate_pml",
    "estimate_rml",
    "estimate_rv",
    "estimate_sml",
    "ols_refit",
    "partial_correlations",
    "sample_covariance",
    "sample_gaussian",
    "sqrt_lasso_all",
    "sqrt_lasso_column",
]
