"""Wavelet density estimation for linear processes.

Construct compactly supported Daubechies wavelets, simulate linear
processes with Gaussian, stable, Cauchy, chi-squared or gamma innovations,
fit the linear wavelet density estimator, and verify its integrated
squared error decay rate by Monte Carlo.
"""

__version__ = "0.1.0"

from .chf import (
    CharFn,
    GammaConditionReport,
    IntegrabilityReport,
    InsufficientDomainError,
    RefDensity,
    audit_gamma_condition,
    audit_integrability,
    cf_reference_density,
    innovation_cf,
    invert_cf_density,
    process_cf,
    reference_density,
    scenario_process,
)
from .estimator import (
    DensityEstimate,
    WaveletDensityEstimator,
    evaluate_estimate,
    estimate_mass,
    fit_density,
    select_jn,
)
from .experiments import (
    Decomposition,
    ExperimentPlan,
    ImseResult,
    QuadSpec,
    RateFit,
    decompose_error,
    fit_rate,
    ise,
    run_imse,
    scenario_presets,
)
from .processes import (
    CoefficientSeq,
    InnovationDist,
    ProcessConfig,
    SamplePath,
    closed_form_A2,
    coeff,
    gen_path,
    sample_innovations,
    sum_abs_pow,
)
from .wavelets import (
    DyadicTable,
    FilterPair,
    FourierDecayReport,
    UnsupportedOrderError,
    build_table,
    cascade,
    daubechies_filter,
    fourier_decay_diagnostic,
    vanishing_moment_defect,
)

__all__ = [
    "__version__",
    "CharFn",
    "CoefficientSeq",
    "Decomposition",
    "DensityEstimate",
    "DyadicTable",
    "ExperimentPlan",
    "FilterPair",
    "FourierDecayReport",
    "GammaConditionReport",
    "ImseResult",
    "InnovationDist",
    "InsufficientDomainError",
    "IntegrabilityReport",
    "ProcessConfig",
    "QuadSpec",
    "RateFit",
    "RefDensity",
    "SamplePath",
    "UnsupportedOrderError",
    "WaveletDensityEstimator",
    "audit_gamma_condition",
    "audit_integrability",
    "build_table",
    "cascade",
    "cf_reference_density",
    "closed_form_A2",
    "coeff",
    "daubechies_filter",
    "decompose_error",
    "estimate_mass",
    "evaluate_estimate",
    "fit_density",
    "fit_rate",
    "fourier_decay_diagnostic",
    "gen_path",
    "innovation_cf",
    "invert_cf_density",
    "ise",
    "process_cf",
    "reference_density",
    "run_imse",
    "sample_innovations",
    "scenario_presets",
    "scenario_process",
    "select_jn",
    "sum_abs_pow",
    "vanishing_moment_defect",
]
