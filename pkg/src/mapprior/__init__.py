"""Predictive priors from a single external study.

Builds the normal-scale-mixture predictive prior a single study implies for
the effect in a new study, evaluates it (density, CDF, quantiles, variance,
sampling), combines it with a new estimate into a shrinkage posterior, and
quantifies the borrowed information through unit-information standard
deviations and expected-local-information-ratio effective sample sizes.
Ships a CLI (``mapprior``) for CSV-driven analyses and table/grid exports.
"""

from .errors import (
    ConfigurationError,
    DataFormatError,
    EssInstabilityError,
    GridCoverageError,
    InvalidParameterError,
    MapPriorError,
    QuadratureError,
)
from .priors import (
    FAMILIES,
    HeterogeneityPrior,
    make_prior,
    parse_prior_spec,
    scale_for_median,
)
from .study import StudyEstimate
from .mixture import MapPrior, conditional_moments
from .shrink import (
    PosteriorSummary,
    ShrinkagePosterior,
    mac_oracle,
    posterior_summary,
    shrinkage_posterior,
    width_ratio,
)
from .information import ess_elir, ess_for_map_prior, ess_table, uisd
from .correspond import (
    a0_density,
    a0_from_tau,
    beta_prior_from_tau_prior,
    reference_model_posterior,
    tau_from_a0,
)
from .dataio import emit_density_grid, load_studies_csv, parse_ratio_ci
from .report import prior_comparison_table, run_map_report

__version__ = "0.1.0"

__all__ = [
    "FAMILIES",
    "HeterogeneityPrior",
    "MapPrior",
    "PosteriorSummary",
    "ShrinkagePosterior",
    "StudyEstimate",
    "a0_density",
    "a0_from_tau",
    "beta_prior_from_tau_prior",
    "conditional_moments",
    "emit_density_grid",
    "ess_elir",
    "ess_for_map_prior",
    "ess_table",
    "load_studies_csv",
    "mac_oracle",
    "make_prior",
    "parse_prior_spec",
    "parse_ratio_ci",
    "posterior_summary",
    "prior_comparison_table",
    "reference_model_posterior",
    "run_map_report",
    "scale_for_median",
    "shrinkage_posterior",
    "tau_from_a0",
    "uisd",
    "width_ratio",
    "MapPriorError",
    "InvalidParameterError",
    "DataFormatError",
    "ConfigurationError",
    "QuadratureError",
    "GridCoverageError",
    "EssInstabilityError",
    "__version__",
]
