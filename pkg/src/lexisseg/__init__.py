"""lexisseg: piecewise-constant bidimensional hazard estimation.

Estimates an age x cohort hazard surface from right-censored survival data by
penalized maximum likelihood. Two penalties are provided: a quadratic (L2)
smoothness penalty on adjacent log-hazard differences, and an adaptive-ridge
iteration that drives those differences to an approximate L0 penalty,
segmenting the surface into connected constant-hazard areas. Model selection
uses AIC/BIC/EBIC on the segmented fits or K-fold cross-validation, and a
replicated-simulation harness benchmarks the estimators against an additive
age-cohort comparator.
"""

__version__ = "0.1.0"

from .data import (
    ExhaustiveStats,
    GridSpec,
    IndividualRecord,
    ShearedCell,
    load_grid,
    load_records,
    load_register,
    shear_to_age_period,
    tabulate,
)
from .likelihood import (
    HazardEstimate,
    LogHazardGrid,
    PenaltyWeights,
    gradient,
    hessian,
    mle,
    neg_log_likelihood,
    penalized_nll,
)
from .banded import (
    BandCholeskyFactor,
    BandedSymMatrix,
    NotPositiveDefiniteError,
    factor,
    solve,
)
from .solver import (
    FitResult,
    HessianFactorizationError,
    NewtonConfig,
    newton_raphson,
    ridge_fit,
)
from .aridge import (
    AridgeConfig,
    Segmentation,
    adaptive_ridge,
    extract_components,
    refit_areas,
    update_weights,
)
from .model_select import (
    CvConfig,
    PenaltyPath,
    aic,
    bic,
    cross_validate,
    default_kappa_grid,
    ebic,
    fold_assignment,
    segmentation_nll,
    select,
)
from .simulate import (
    KNOWN_METHODS,
    PiecewiseArea,
    PiecewiseDesign,
    SimConfig,
    SmoothDesign,
    design_from_dict,
    design_to_dict,
    fit_age_cohort,
    load_design,
    mse,
    run_replicates,
    sample_dataset,
    smooth_true_hazard,
    true_hazard,
)

__all__ = [
    "__version__",
    # data
    "ExhaustiveStats",
    "GridSpec",
    "IndividualRecord",
    "ShearedCell",
    "load_grid",
    "load_records",
    "load_register",
    "shear_to_age_period",
    "tabulate",
    # likelihood
    "HazardEstimate",
    "LogHazardGrid",
    "PenaltyWeights",
    "gradient",
    "hessian",
    "mle",
    "neg_log_likelihood",
    "penalized_nll",
    # banded solver
    "BandCholeskyFactor",
    "BandedSymMatrix",
    "NotPositiveDefiniteError",
    "factor",
    "solve",
    # Newton solver
    "FitResult",
    "HessianFactorizationError",
    "NewtonConfig",
    "newton_raphson",
    "ridge_fit",
    # adaptive ridge
    "AridgeConfig",
    "Segmentation",
    "adaptive_ridge",
    "extract_components",
    "refit_areas",
    "update_weights",
    # model selection
    "CvConfig",
    "PenaltyPath",
    "aic",
    "bic",
    "cross_validate",
    "default_kappa_grid",
    "ebic",
    "fold_assignment",
    "segmentation_nll",
    "select",
    # simulation
    "KNOWN_METHODS",
    "PiecewiseArea",
    "PiecewiseDesign",
    "SimConfig",
    "SmoothDesign",
    "design_from_dict",
    "design_to_dict",
    "fit_age_cohort",
    "load_design",
    "mse",
    "run_replicates",
    "sample_dataset",
    "smooth_true_hazard",
    "true_hazard",
]
