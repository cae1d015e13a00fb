"""Counting statistics of the hard-wall Mittag-Leffler ensemble.

Exact finite-n evaluation through incomplete gamma products, the large-n
expansion with its theta-function oscillation, and an exact sampler.
"""

__version__ = "0.1.0"

from .asymptotic import (
    AsymptoticExpansion,
    clt_covariance,
    constants,
    covariance_asymptotics,
    cumulant_asymptotics,
    expectation_asymptotics,
    log_mgf_asymptotic,
)
from .errors import ConfigError, DomainError, HardWallError, PrecisionError, QuadratureError
from .exact import (
    counting_pmf,
    discrete_gaussian_pmf,
    exact_moments,
    log_mgf_exact,
    log_mgf_mixture,
    mode_probabilities,
    total_variation,
)
from .model import ModelParams, ObservableGrid, equilibrium
from .sampler import SampleBatch, export_point_cloud, sample_counts, sample_moduli

__all__ = [
    "AsymptoticExpansion",
    "ConfigError",
    "DomainError",
    "HardWallError",
    "ModelParams",
    "ObservableGrid",
    "PrecisionError",
    "QuadratureError",
    "SampleBatch",
    "clt_covariance",
    "constants",
    "counting_pmf",
    "covariance_asymptotics",
    "cumulant_asymptotics",
    "discrete_gaussian_pmf",
    "equilibrium",
    "exact_moments",
    "expectation_asymptotics",
    "export_point_cloud",
    "log_mgf_asymptotic",
    "log_mgf_exact",
    "log_mgf_mixture",
    "mode_probabilities",
    "sample_counts",
    "sample_moduli",
    "total_variation",
]
