"""Extrapolation of bandlimited N-dimensional grid signals from weighted
region measurements, with a damped (Tikhonov) variant and an eigen-analysis
toolkit for the underlying contraction constants."""

from .engine import (
    IterationRecord,
    IterationReport,
    OracleSolution,
    RunConfig,
    least_squares_oracle,
    run_extrapolation,
    tikhonov_oracle,
)
from .errors import (
    BandexError,
    ConfigError,
    ContractViolationError,
    ConvergenceError,
    DivergenceError,
    FormatError,
    InternalConsistencyError,
    ParameterError,
    SynthesisError,
    UndefinedMetricError,
    ValidationError,
)
from .estimator import PapoulisExtrapolator
from .grid import (
    GridShape,
    MeasuredSignal,
    Region,
    Signal,
    SpectralSupport,
    WeightedRegionSet,
    make_spectral_support,
    region_from_rect,
    validate_weighted_regions,
)
from .operators import (
    RegularizationParams,
    bandlimit_project,
    composite_apply,
    initial_estimate,
    papoulis_step,
    region_truncate,
    regularized_step,
)
from .spectral import (
    BandlimitedBasis,
    ContractionEstimate,
    EigenSpectrum,
    combined_lipschitz,
    eigen_spectrum,
    lipschitz_regularized,
    lipschitz_unregularized,
    suggest_weights,
    tau_upper_bound,
)
from .synthesis import (
    SynthesisSpec,
    add_out_of_band_noise,
    nmse,
    random_bandlimited,
    snr_in_out,
)

__version__ = "0.1.0"

__all__ = [
    "BandexError",
    "BandlimitedBasis",
    "ConfigError",
    "ContractViolationError",
    "ContractionEstimate",
    "ConvergenceError",
    "DivergenceError",
    "EigenSpectrum",
    "FormatError",
    "GridShape",
    "InternalConsistencyError",
    "IterationRecord",
    "IterationReport",
    "MeasuredSignal",
    "OracleSolution",
    "PapoulisExtrapolator",
    "ParameterError",
    "Region",
    "RegularizationParams",
    "RunConfig",
    "Signal",
    "SpectralSupport",
    "SynthesisError",
    "SynthesisSpec",
    "UndefinedMetricError",
    "ValidationError",
    "WeightedRegionSet",
    "add_out_of_band_noise",
    "bandlimit_project",
    "combined_lipschitz",
    "composite_apply",
    "eigen_spectrum",
    "initial_estimate",
    "least_squares_oracle",
    "lipschitz_regularized",
    "lipschitz_unregularized",
    "make_spectral_support",
    "nmse",
    "papoulis_step",
    "random_bandlimited",
    "region_from_rect",
    "region_truncate",
    "regularized_step",
    "run_extrapolation",
    "snr_in_out",
    "suggest_weights",
    "tau_upper_bound",
    "tikhonov_oracle",
    "validate_weighted_regions",
]
