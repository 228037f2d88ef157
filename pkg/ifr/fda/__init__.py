"""
Numerical core: bases, functional data, function-on-function regression and
the interval-valued models built on it.
"""
from .basis import BasisSpec, basis_matrix, cross_gram, evaluate_basis, gram_matrix, smooth, smooth_matrix
from .fda_core import (
    FunctionalDataset,
    FunctionalSample,
    center,
    eval_dataset_on_grid,
    eval_on_grid,
    l2_distance,
    mean_function,
    riemann_l2_norm,
)
from .fof_regression import FofDesign, FofFit, build_design, coefficient_surface, fit_ml, predict
from .interval_fd import (
    IntervalFunctionalDataset,
    IntervalFunctionalSample,
    center_curve,
    enforce_ordering,
    from_discrete,
    range_curve,
)
from .interval_models import (
    IntervalFitResult,
    ModelKind,
    ModelOptions,
    PredictionBand,
    ResidualPool,
    fit,
    mcm_prediction_band,
    predict_limits,
)

__all__ = [
    "BasisSpec", "basis_matrix", "cross_gram", "evaluate_basis", "gram_matrix", "smooth", "smooth_matrix",
    "FunctionalDataset", "FunctionalSample", "center", "eval_dataset_on_grid", "eval_on_grid",
    "l2_distance", "mean_function", "riemann_l2_norm",
    "FofDesign", "FofFit", "build_design", "coefficient_surface", "fit_ml", "predict",
    "IntervalFunctionalDataset", "IntervalFunctionalSample", "center_curve", "enforce_ordering",
    "from_discrete", "range_curve",
    "IntervalFitResult", "ModelKind", "ModelOptions", "PredictionBand", "ResidualPool", "fit",
    "mcm_prediction_band", "predict_limits",
]
