"""
Interval-valued functional data: lower and upper limit curves on one common basis.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..exceptions import DataValidationError, ShapeMismatchError
from .basis import BasisSpec, check_grid, smooth_matrix
from .fda_core import FunctionalDataset, FunctionalSample, eval_dataset_on_grid

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class IntervalFunctionalSample:
    """A pair of limit curves sharing the common basis."""

    lower: FunctionalSample
    upper: FunctionalSample

    def __post_init__(self):
        if self.lower.basis != self.upper.basis:
            raise ShapeMismatchError("lower and upper limits must share one common basis")

    @property
    def basis(self) -> BasisSpec:
        return self.lower.basis


def center_curve(s: IntervalFunctionalSample) -> FunctionalSample:
    """Mid-point curve (upper + lower) / 2, exact coefficientwise."""
    return FunctionalSample((s.upper.coefficients + s.lower.coefficients) / 2.0, s.basis)


def range_curve(s: IntervalFunctionalSample) -> FunctionalSample:
    """Half-range curve (upper - lower) / 2, exact coefficientwise."""
    return FunctionalSample((s.upper.coefficients - s.lower.coefficients) / 2.0, s.basis)


@dataclass(frozen=True, eq=False)
class IntervalFunctionalDataset:
    """N interval-valued curves on a common basis and observation grid.

    ``observed_lower``/``observed_upper`` keep the raw (N, J) grid values when
    the dataset was built from discrete observations; metrics and Monte Carlo
    draws use them in preference to the smoothed curves.
    """

    lower: FunctionalDataset
    upper: FunctionalDataset
    grid: NDArray[np.float64]
    observed_lower: Optional[NDArray[np.float64]] = None
    observed_upper: Optional[NDArray[np.float64]] = None

    def __post_init__(self):
        if self.lower.basis != self.upper.basis:
            raise ShapeMismatchError("lower and upper limits must share one common basis")
        if len(self.lower) != len(self.upper):
            raise ShapeMismatchError(
                f"lower has {len(self.lower)} curves, upper has {len(self.upper)}"
            )
        grid = np.array(self.grid, dtype=float)
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        for name in ("observed_lower", "observed_upper"):
            values = getattr(self, name)
            if values is None:
                continue
            values = np.array(values, dtype=float)
            if values.shape != (len(self.lower), grid.size):
                raise ShapeMismatchError(
                    f"{name} has shape {values.shape}, expected {(len(self.lower), grid.size)}"
                )
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    def __len__(self) -> int:
        return len(self.lower)

    def __getitem__(self, index: int) -> IntervalFunctionalSample:
        return IntervalFunctionalSample(self.lower[index], self.upper[index])

    @property
    def basis(self) -> BasisSpec:
        return self.lower.basis

    def center(self) -> FunctionalDataset:
        return FunctionalDataset((self.upper.coefficients + self.lower.coefficients) / 2.0, self.basis)

    def half_range(self) -> FunctionalDataset:
        return FunctionalDataset((self.upper.coefficients - self.lower.coefficients) / 2.0, self.basis)

    def limb(self, name: str) -> FunctionalDataset:
        """One component by name: lower, upper, center or range."""
        if name == "lower":
            return self.lower
        if name == "upper":
            return self.upper
        if name == "center":
            return self.center()
        if name == "range":
            return self.half_range()
        raise ValueError(f"unknown interval component {name!r}")

    def lower_values(self) -> NDArray[np.float64]:
        if self.observed_lower is not None:
            return self.observed_lower
        return eval_dataset_on_grid(self.lower, self.grid)

    def upper_values(self) -> NDArray[np.float64]:
        if self.observed_upper is not None:
            return self.observed_upper
        return eval_dataset_on_grid(self.upper, self.grid)

    def subset(self, indices: ArrayLike) -> "IntervalFunctionalDataset":
        idx = np.asarray(indices, dtype=int)
        return IntervalFunctionalDataset(
            lower=self.lower.subset(idx),
            upper=self.upper.subset(idx),
            grid=self.grid,
            observed_lower=None if self.observed_lower is None else self.observed_lower[idx],
            observed_upper=None if self.observed_upper is None else self.observed_upper[idx],
        )


def count_inversions(lower_values: ArrayLike, upper_values: ArrayLike) -> int:
    return int(np.count_nonzero(np.asarray(lower_values) > np.asarray(upper_values)))


def from_discrete(
    lower_values: ArrayLike,
    upper_values: ArrayLike,
    grid: ArrayLike,
    spec: BasisSpec,
    strict: bool = True,
) -> IntervalFunctionalDataset:
    """Smooth discretely observed limit curves onto the common basis.

    Args:
        lower_values, upper_values: (N, J) raw limit values.
        strict: reject any lower > upper cell. With ``strict=False`` inverted
            cells are kept as observed and only logged.
    """
    lo = np.atleast_2d(np.asarray(lower_values, dtype=float))
    hi = np.atleast_2d(np.asarray(upper_values, dtype=float))
    if lo.shape != hi.shape:
        raise ShapeMismatchError(f"lower shape {lo.shape} differs from upper shape {hi.shape}")
    g = check_grid(spec, grid)
    if lo.shape[1] != g.size:
        raise ShapeMismatchError(f"values have {lo.shape[1]} columns, grid has {g.size} points")

    inverted = np.argwhere(lo > hi)
    if inverted.size:
        if strict:
            i, j = (int(v) for v in inverted[0])
            raise DataValidationError(
                f"lower limit exceeds upper limit at sample {i}, grid point {j} "
                f"({lo[i, j]!r} > {hi[i, j]!r}); {len(inverted)} inverted cells in total"
            )
        logger.debug(f"Accepted {len(inverted)} inverted raw interval cells")

    return IntervalFunctionalDataset(
        lower=FunctionalDataset(smooth_matrix(spec, g, lo), spec),
        upper=FunctionalDataset(smooth_matrix(spec, g, hi), spec),
        grid=g,
        observed_lower=lo,
        observed_upper=hi,
    )


def enforce_ordering(
    lower_pred: ArrayLike, upper_pred: ArrayLike
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Pointwise (min, max) of two predicted limit grids."""
    lo = np.asarray(lower_pred, dtype=float)
    hi = np.asarray(upper_pred, dtype=float)
    if lo.shape != hi.shape:
        raise ShapeMismatchError(f"lower shape {lo.shape} differs from upper shape {hi.shape}")
    return np.minimum(lo, hi), np.maximum(lo, hi)
