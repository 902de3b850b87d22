"""Peaks-over-threshold forecasting with generalised Pareto models."""

from .bayes import (
    AnchoredScale,
    FlatShape,
    LogFlatScale,
    PosteriorChain,
    PriorSpec,
    TruncatedGaussianShape,
    credible_interval,
    default_prior,
    log_posterior_unnorm,
    log_prior,
    sample_posterior,
)
from .errors import (
    ChainDegeneracyError,
    DegenerateDataError,
    ExperimentError,
    NumericalError,
    SingularityError,
    ValidityWarning,
)
from .estimators import GPWM, ML, ExcessData, FitResult, endpoint_estimate, extract_excesses, fit_gpwm, fit_mle
from .gpd import (
    GpParams,
    SupportInterval,
    gp_cdf,
    gp_density,
    gp_loglik,
    gp_quantile,
    gp_sample,
    gp_sf,
    threshold_stability_transform,
)
from .predictive import (
    Kind,
    PredictiveInterval,
    PredictiveSpec,
    excess_predictive_density,
    extreme_level,
    extreme_quantile,
    peak_predictive_density,
    posterior_predictive_density,
    predictive_interval,
)

__version__ = "0.1.0"

__all__ = [
    "AnchoredScale",
    "ChainDegeneracyError",
    "DegenerateDataError",
    "ExcessData",
    "ExperimentError",
    "FitResult",
    "FlatShape",
    "GPWM",
    "GpParams",
    "Kind",
    "LogFlatScale",
    "ML",
    "NumericalError",
    "PosteriorChain",
    "PredictiveInterval",
    "PredictiveSpec",
    "PriorSpec",
    "SingularityError",
    "SupportInterval",
    "TruncatedGaussianShape",
    "ValidityWarning",
    "credible_interval",
    "default_prior",
    "endpoint_estimate",
    "excess_predictive_density",
    "extract_excesses",
    "extreme_level",
    "extreme_quantile",
    "fit_gpwm",
    "fit_mle",
    "gp_cdf",
    "gp_density",
    "gp_loglik",
    "gp_quantile",
    "gp_sample",
    "gp_sf",
    "log_posterior_unnorm",
    "log_prior",
    "peak_predictive_density",
    "posterior_predictive_density",
    "predictive_interval",
    "sample_posterior",
    "threshold_stability_transform",
]
