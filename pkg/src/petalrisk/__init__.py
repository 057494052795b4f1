"""SCORE2 cardiovascular risk with area-proportional petal-chart explanations.

The package computes SCORE2 10-year CVD risk from externally loaded
coefficients, fits and quantizes interpretable no-intercept linear
surrogates, lays out flower charts whose petal areas are exactly
proportional to each factor's risk contribution, renders them to SVG, and
serves interactive what-if exploration over HTTP.
"""

from .score2 import (
    FACTOR_RANGES,
    FactorRange,
    OutOfRangeError,
    PatientRecord,
    RiskRegion,
    Score2CoefficientBundle,
    Sex,
    evaluate_score2,
    linear_predictor,
    load_coefficient_bundle,
    load_default_bundle,
    non_hdl,
    region_from_mortality,
    validate_patient,
)
from .surrogate import (
    FACTOR_ORDER,
    NormalizedFactors,
    SurrogateModel,
    WhatIfScenario,
    applicable_scenarios,
    contributions,
    denormalize,
    fit_no_intercept,
    gsc_surrogate,
    normalize,
    predict,
    quantized_surrogate,
    risk_reduction,
)
from .geometry import (
    FlowerLayout,
    LobeAllocation,
    MultilobePetalSpec,
    PetalSpec,
    area_constant,
    build_flower,
    hamilton_apportion,
    multilobe_area,
    petal_area,
    petal_boundary_radius,
    quantized_coefficients,
    sample_outline,
)
from .evaluation import (
    CohortRow,
    ExclusionReport,
    FidelityReport,
    SyntheticCohortConfig,
    compare_surrogates,
    fidelity_metrics,
    generate_synthetic,
    ingest_csv,
    spearman,
)
from .render import RenderOptions, RiskColorClass, render_flower_svg, render_gsc_svg, risk_color

__version__ = "0.1.0"
