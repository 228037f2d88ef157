"""
Interval-valued function-on-function regression models.

  FLM   separate models for the lower and the upper limits
  CM    one model on centers, applied to the lower and upper predictor limits
  CRM   a center model and a half-range model, recomposed into limits
  BCRM  center and half-range models that both use centers and half-ranges
  MCM   models fitted on curves drawn uniformly inside the intervals, averaged
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike, NDArray

from ..exceptions import ConfigurationError, EstimationError, ShapeMismatchError
from .basis import basis_matrix, smooth_matrix
from .fda_core import FunctionalDataset, FunctionalSample, mean_function
from .fof_regression import FofFit, build_design, design_for, fit_ml, predict_coefficients
from .interval_fd import IntervalFunctionalDataset, count_inversions, enforce_ordering

logger = logging.getLogger(__name__)

LIMBS = ("lower", "upper", "center", "range")


class ModelKind(str, Enum):
    FLM = "flm"
    CM = "cm"
    CRM = "crm"
    BCRM = "bcrm"
    MCM = "mcm"

    @classmethod
    def parse(cls, value: "str | ModelKind") -> "ModelKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ConfigurationError(f"unknown model {value!r}; expected one of {names}") from None


@dataclass(frozen=True)
class ModelOptions:
    """Options for fitting; only MCM reads them."""

    mcm_replicates: int = 100
    seed: int = 0
    n_jobs: int = 1


@dataclass(frozen=True, eq=False)
class ResidualPool:
    """Whole training residual curves of the lower and upper limits, (N, J) each."""

    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    grid: NDArray[np.float64]

    def __len__(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True, eq=False)
class IntervalFitResult:
    kind: ModelKind
    fits: Dict[str, FofFit]
    response_means: Dict[str, FunctionalSample]
    predictor_means: Dict[str, List[NDArray[np.float64]]]
    response_grid: NDArray[np.float64]
    replicate_coefficients: Optional[NDArray[np.float64]] = None
    residual_pool: Optional[ResidualPool] = None
    options: ModelOptions = field(default_factory=ModelOptions)

    @property
    def response_spec(self):
        return self.response_means["lower"].basis

    @property
    def predictor_specs(self):
        first = next(iter(self.fits.values()))
        # BCRM stacks centers and half-ranges; the first M specs are the predictors.
        return first.predictor_specs[: len(self.predictor_means["lower"])]

    @property
    def n_predictors(self) -> int:
        return len(self.predictor_means["lower"])


@dataclass(frozen=True, eq=False)
class LimitPrediction:
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    inverted: int


@dataclass(frozen=True, eq=False)
class PredictionBand:
    """Pointwise MCM prediction bands for the lower and upper limit curves, (N, J) each."""

    grid: NDArray[np.float64]
    lower_low: NDArray[np.float64]
    lower_high: NDArray[np.float64]
    upper_low: NDArray[np.float64]
    upper_high: NDArray[np.float64]
    alpha: float

    def coverage(self, observed_lower: ArrayLike, observed_upper: ArrayLike) -> Tuple[float, float]:
        """Fractions of (sample, grid point) pairs whose observed limit lies inside its band."""
        lo = np.asarray(observed_lower, dtype=float)
        hi = np.asarray(observed_upper, dtype=float)
        if lo.shape != self.lower_low.shape or hi.shape != self.upper_low.shape:
            raise ShapeMismatchError("observed limits do not match the band shape")
        cp_lower = np.mean((lo >= self.lower_low) & (lo <= self.lower_high))
        cp_upper = np.mean((hi >= self.upper_low) & (hi <= self.upper_high))
        return float(cp_lower), float(cp_upper)


def _limb_list(X: Sequence[IntervalFunctionalDataset], limb: str) -> List[FunctionalDataset]:
    return [x.limb(limb) for x in X]


def _check_inputs(Y: IntervalFunctionalDataset, X: Sequence[IntervalFunctionalDataset]) -> None:
    if not X:
        raise ShapeMismatchError("at least one interval-valued predictor is required")
    n = len(Y)
    if n == 0:
        raise EstimationError("cannot fit a model on zero samples")
    for m, x in enumerate(X):
        if len(x) != n:
            raise ShapeMismatchError(f"predictor {m} has {len(x)} curves, response has {n}")


def _fit_limb(response: FunctionalDataset, predictors: Sequence[FunctionalDataset]) -> FofFit:
    return fit_ml(build_design(predictors), response)


def _draw_inside(rng: np.random.Generator, data: IntervalFunctionalDataset) -> NDArray[np.float64]:
    """Pointwise uniform draws between the observed limits, read as (min, max)."""
    lo, hi = enforce_ordering(data.lower_values(), data.upper_values())
    return lo + (hi - lo) * rng.random(lo.shape)


def _mcm_replicate(
    seed_seq: np.random.SeedSequence,
    Y: IntervalFunctionalDataset,
    X: Sequence[IntervalFunctionalDataset],
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """One MCM replicate: draw curves inside the intervals, smooth, fit."""
    rng = np.random.default_rng(seed_seq)
    y_star = _draw_inside(rng, Y)
    response = FunctionalDataset(smooth_matrix(Y.basis, Y.grid, y_star), Y.basis)
    predictors = []
    for x in X:
        x_star = _draw_inside(rng, x)
        predictors.append(FunctionalDataset(smooth_matrix(x.basis, x.grid, x_star), x.basis))
    replicate = _fit_limb(response, predictors)
    return replicate.B_hat, replicate.Sigma_hat


def replicate_seeds(seed: int, count: int) -> List[np.random.SeedSequence]:
    """Per-replicate seeds that depend only on (seed, replicate index)."""
    return [np.random.SeedSequence(seed, spawn_key=(b,)) for b in range(count)]


def _fit_mcm(
    Y: IntervalFunctionalDataset,
    X: Sequence[IntervalFunctionalDataset],
    options: ModelOptions,
) -> Tuple[FofFit, NDArray[np.float64]]:
    if options.mcm_replicates < 2:
        raise ConfigurationError(f"MCM needs at least 2 replicates, got {options.mcm_replicates}")
    logger.debug(f"Fitting MCM with {options.mcm_replicates} replicates (seed={options.seed})")
    outputs = Parallel(n_jobs=options.n_jobs)(
        delayed(_mcm_replicate)(seq, Y, X)
        for seq in replicate_seeds(options.seed, options.mcm_replicates)
    )
    stacked = np.stack([B for B, _ in outputs])
    sigma = np.mean(np.stack([S for _, S in outputs]), axis=0)

    # Centering and Gram information come from the interval centers; predictions
    # override the means per limb.
    center_design = build_design(_limb_list(X, "center"))
    averaged = FofFit(
        B_hat=stacked.mean(axis=0),
        Sigma_hat=sigma,
        response_mean=mean_function(Y.center()),
        predictor_specs=list(center_design.predictor_specs),
        predictor_means=list(center_design.predictor_means),
        grams=list(center_design.grams),
        log_likelihood=None,
        n_samples=len(Y),
    )
    return averaged, stacked


def fit(
    kind: "ModelKind | str",
    Y: IntervalFunctionalDataset,
    X: Sequence[IntervalFunctionalDataset],
    options: Optional[ModelOptions] = None,
) -> IntervalFitResult:
    """Fit one interval-valued functional regression model."""
    kind = ModelKind.parse(kind)
    options = options or ModelOptions()
    X = list(X)
    _check_inputs(Y, X)

    response_means = {limb: mean_function(Y.limb(limb)) for limb in LIMBS}
    predictor_means = {
        limb: [mean_function(ds).coefficients for ds in _limb_list(X, limb)] for limb in LIMBS
    }

    replicate_coefficients = None
    if kind is ModelKind.FLM:
        fits = {
            "lower": _fit_limb(Y.lower, _limb_list(X, "lower")),
            "upper": _fit_limb(Y.upper, _limb_list(X, "upper")),
        }
    elif kind is ModelKind.CM:
        fits = {"center": _fit_limb(Y.center(), _limb_list(X, "center"))}
    elif kind is ModelKind.CRM:
        fits = {
            "center": _fit_limb(Y.center(), _limb_list(X, "center")),
            "range": _fit_limb(Y.half_range(), _limb_list(X, "range")),
        }
    elif kind is ModelKind.BCRM:
        joint = _limb_list(X, "center") + _limb_list(X, "range")
        fits = {
            "center": _fit_limb(Y.center(), joint),
            "range": _fit_limb(Y.half_range(), joint),
        }
    else:
        averaged, replicate_coefficients = _fit_mcm(Y, X, options)
        fits = {"mcm": averaged}

    result = IntervalFitResult(
        kind=kind,
        fits=fits,
        response_means=response_means,
        predictor_means=predictor_means,
        response_grid=np.array(Y.grid),
        replicate_coefficients=replicate_coefficients,
        options=options,
    )
    if kind is ModelKind.MCM:
        result = replace(result, residual_pool=mcm_residual_pool(result, X, Y))
    logger.debug(f"Fitted {kind.value.upper()} on {len(Y)} samples")
    return result


def _check_new_predictors(result: IntervalFitResult, X_new: Sequence[IntervalFunctionalDataset]) -> None:
    if len(X_new) != result.n_predictors:
        raise ShapeMismatchError(
            f"model was trained on {result.n_predictors} predictors, got {len(X_new)}"
        )
    n = len(X_new[0])
    for m, (x, spec) in enumerate(zip(X_new, result.predictor_specs)):
        if x.basis != spec:
            raise ShapeMismatchError(f"predictor {m} is not on the training basis")
        if len(x) != n:
            raise ShapeMismatchError("new predictors have differing sample counts")


def _limb_coefficients(
    result: IntervalFitResult, fit_: FofFit, X_new: Sequence[IntervalFunctionalDataset], limb: str
) -> NDArray[np.float64]:
    """Centered predicted coefficients from one predictor limb, centered with that limb's means."""
    design = design_for(fit_, _limb_list(X_new, limb), means=result.predictor_means[limb])
    return predict_coefficients(fit_, design)


def predict_coefficient_limits(
    result: IntervalFitResult, X_new: Sequence[IntervalFunctionalDataset]
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Predicted lower and upper coefficient rows before ordering enforcement."""
    X_new = list(X_new)
    _check_new_predictors(result, X_new)
    means = {limb: result.response_means[limb].coefficients for limb in LIMBS}
    kind = result.kind

    if kind is ModelKind.FLM:
        lower = _limb_coefficients(result, result.fits["lower"], X_new, "lower") + means["lower"]
        upper = _limb_coefficients(result, result.fits["upper"], X_new, "upper") + means["upper"]
    elif kind in (ModelKind.CM, ModelKind.MCM):
        fit_ = result.fits["center" if kind is ModelKind.CM else "mcm"]
        lower = _limb_coefficients(result, fit_, X_new, "lower") + means["lower"]
        upper = _limb_coefficients(result, fit_, X_new, "upper") + means["upper"]
    else:
        if kind is ModelKind.CRM:
            center_inputs = _limb_list(X_new, "center")
            range_inputs = _limb_list(X_new, "range")
        else:
            center_inputs = range_inputs = _limb_list(X_new, "center") + _limb_list(X_new, "range")
        center_fit, range_fit = result.fits["center"], result.fits["range"]
        center = predict_coefficients(center_fit, design_for(center_fit, center_inputs)) + means["center"]
        half_range = predict_coefficients(range_fit, design_for(range_fit, range_inputs)) + means["range"]
        lower, upper = center - half_range, center + half_range
    return lower, upper


def predict_limits_detailed(
    result: IntervalFitResult,
    X_new: Sequence[IntervalFunctionalDataset],
    grid: Optional[ArrayLike] = None,
) -> LimitPrediction:
    """Predicted limit values on the grid with ordering enforced and inversions counted."""
    grid = result.response_grid if grid is None else np.asarray(grid, dtype=float)
    lower_coefs, upper_coefs = predict_coefficient_limits(result, X_new)
    phi = basis_matrix(result.response_spec, grid)
    raw_lower, raw_upper = lower_coefs @ phi.T, upper_coefs @ phi.T
    inverted = count_inversions(raw_lower, raw_upper)
    if inverted:
        logger.debug(f"{result.kind.value.upper()}: ordering enforced on {inverted} predicted points")
    lower, upper = enforce_ordering(raw_lower, raw_upper)
    return LimitPrediction(lower=lower, upper=upper, inverted=inverted)


def predict_limits(
    result: IntervalFitResult,
    X_new: Sequence[IntervalFunctionalDataset],
    grid: Optional[ArrayLike] = None,
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Predicted (lower, upper) limit values, each (N, J), with lower <= upper everywhere."""
    prediction = predict_limits_detailed(result, X_new, grid)
    return prediction.lower, prediction.upper


def mcm_residual_pool(
    result: IntervalFitResult,
    X_train: Sequence[IntervalFunctionalDataset],
    Y_train: IntervalFunctionalDataset,
) -> ResidualPool:
    """Whole-curve training residuals of the observed limits against the fitted limits."""
    lower, upper = predict_limits(result, X_train, Y_train.grid)
    return ResidualPool(
        lower=Y_train.lower_values() - lower,
        upper=Y_train.upper_values() - upper,
        grid=np.array(Y_train.grid),
    )


def mcm_prediction_band(
    result: IntervalFitResult,
    X_new: Sequence[IntervalFunctionalDataset],
    residual_pool: Optional[ResidualPool] = None,
    alpha: float = 0.05,
    grid: Optional[ArrayLike] = None,
    seed: int = 0,
) -> PredictionBand:
    """Pointwise quantile bands from per-replicate predictions plus resampled residual curves.

    Each replicate b adds a whole residual curve, drawn uniformly with
    replacement from the pool, to (Z B_b) Phi + mean. ``alpha = 1`` collapses
    the band onto the median replicate.
    """
    if result.kind is not ModelKind.MCM or result.replicate_coefficients is None:
        raise ConfigurationError("prediction bands require an MCM fit")
    if not 0.0 < alpha <= 1.0:
        raise EstimationError(f"alpha must lie in (0, 1], got {alpha}")
    pool = residual_pool if residual_pool is not None else result.residual_pool
    if pool is None or len(pool) == 0:
        raise EstimationError("the residual pool is empty")
    grid = pool.grid if grid is None else np.asarray(grid, dtype=float)
    if grid.shape != pool.grid.shape or not np.allclose(grid, pool.grid):
        raise ShapeMismatchError("band grid must match the residual pool grid")

    X_new = list(X_new)
    _check_new_predictors(result, X_new)
    fit_ = result.fits["mcm"]
    Z_lower = design_for(fit_, _limb_list(X_new, "lower"), means=result.predictor_means["lower"]).Z
    Z_upper = design_for(fit_, _limb_list(X_new, "upper"), means=result.predictor_means["upper"]).Z
    phi = basis_matrix(result.response_spec, grid)
    mean_lower = phi @ result.response_means["lower"].coefficients
    mean_upper = phi @ result.response_means["upper"].coefficients

    replicates = result.replicate_coefficients
    n_rep, n_new = replicates.shape[0], Z_lower.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    draw_lower = rng.integers(0, len(pool), size=(n_rep, n_new))
    draw_upper = rng.integers(0, len(pool), size=(n_rep, n_new))

    fitted_lower = np.matmul(Z_lower, replicates) @ phi.T
    fitted_upper = np.matmul(Z_upper, replicates) @ phi.T
    sims_lower = fitted_lower + mean_lower + pool.lower[draw_lower]
    sims_upper = fitted_upper + mean_upper + pool.upper[draw_upper]

    probs = [alpha / 2.0, 1.0 - alpha / 2.0]
    q_lower = np.quantile(sims_lower, probs, axis=0)
    q_upper = np.quantile(sims_upper, probs, axis=0)
    return PredictionBand(
        grid=grid,
        lower_low=q_lower[0],
        lower_high=q_lower[1],
        upper_low=q_upper[0],
        upper_high=q_upper[1],
        alpha=float(alpha),
    )
