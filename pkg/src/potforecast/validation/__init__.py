"""Distribution oracles, Hellinger distances and simulation experiments."""

from .experiments import (
    BAYES,
    ContractionRow,
    ContractionTable,
    CoverageReport,
    approximation_distance,
    contraction_experiment,
    excess_hellinger,
    normalized_excess_density,
    rate_w,
    rate_z,
    simulate_coverage,
)
from .hellinger import hellinger
from .oracles import ORACLES, Burr, DistributionOracle, ExactGP, Exponential, FiniteEndpointPower, make_oracle

__all__ = [
    "BAYES",
    "ORACLES",
    "Burr",
    "ContractionRow",
    "ContractionTable",
    "CoverageReport",
    "DistributionOracle",
    "ExactGP",
    "Exponential",
    "FiniteEndpointPower",
    "approximation_distance",
    "contraction_experiment",
    "excess_hellinger",
    "hellinger",
    "make_oracle",
    "normalized_excess_density",
    "rate_w",
    "rate_z",
    "simulate_coverage",
]
