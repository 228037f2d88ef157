"""
Functional samples and datasets represented by basis coefficients.
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..exceptions import DataValidationError, EstimationError, ShapeMismatchError
from .basis import BasisSpec, basis_matrix

# Relative tolerance when checking that a grid is equally spaced.
_SPACING_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """One curve c' Phi(t) on a basis."""

    coefficients: NDArray[np.float64]
    basis: BasisSpec

    def __post_init__(self):
        coefs = np.array(self.coefficients, dtype=float)
        if coefs.ndim != 1 or coefs.size != self.basis.num_basis:
            raise ShapeMismatchError(
                f"expected {self.basis.num_basis} coefficients, got shape {coefs.shape}"
            )
        coefs.setflags(write=False)
        object.__setattr__(self, "coefficients", coefs)


@dataclass(frozen=True, eq=False)
class FunctionalDataset:
    """N curves sharing one basis; coefficients stored row-wise as an (N, K) matrix."""

    coefficients: NDArray[np.float64]
    basis: BasisSpec

    def __post_init__(self):
        coefs = np.array(self.coefficients, dtype=float)
        if coefs.ndim != 2 or coefs.shape[1] != self.basis.num_basis:
            raise ShapeMismatchError(
                f"expected an (N, {self.basis.num_basis}) coefficient matrix, got {coefs.shape}"
            )
        coefs.setflags(write=False)
        object.__setattr__(self, "coefficients", coefs)

    @classmethod
    def from_samples(cls, samples: Sequence[FunctionalSample]) -> "FunctionalDataset":
        if not samples:
            raise EstimationError("a functional dataset needs at least one sample")
        basis = samples[0].basis
        if any(s.basis != basis for s in samples):
            raise ShapeMismatchError("all samples must reference the identical basis")
        return cls(np.vstack([s.coefficients for s in samples]), basis)

    def __len__(self) -> int:
        return self.coefficients.shape[0]

    def __getitem__(self, index: int) -> FunctionalSample:
        return FunctionalSample(self.coefficients[index], self.basis)

    def subset(self, indices: ArrayLike) -> "FunctionalDataset":
        return FunctionalDataset(self.coefficients[np.asarray(indices, dtype=int)], self.basis)


def mean_function(ds: FunctionalDataset) -> FunctionalSample:
    """Coefficientwise mean; exact functional mean by linearity of the expansion."""
    if len(ds) == 0:
        raise EstimationError("cannot take the mean of an empty dataset")
    return FunctionalSample(ds.coefficients.mean(axis=0), ds.basis)


def center(ds: FunctionalDataset) -> Tuple[FunctionalDataset, FunctionalSample]:
    """Subtract the mean curve; returns (centered dataset, removed mean)."""
    mean = mean_function(ds)
    return FunctionalDataset(ds.coefficients - mean.coefficients, ds.basis), mean


def eval_on_grid(s: FunctionalSample, grid: ArrayLike) -> NDArray[np.float64]:
    return basis_matrix(s.basis, grid) @ s.coefficients


def eval_dataset_on_grid(ds: FunctionalDataset, grid: ArrayLike) -> NDArray[np.float64]:
    """(N, J) matrix of every curve evaluated on the grid."""
    return ds.coefficients @ basis_matrix(ds.basis, grid).T


def grid_step(grid: ArrayLike) -> float:
    """Spacing of an equally spaced grid."""
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise DataValidationError("a Riemann grid needs at least two points")
    steps = np.diff(g)
    step = steps[0]
    if step <= 0 or not np.allclose(steps, step, rtol=_SPACING_RTOL, atol=0.0):
        raise DataValidationError("grid must be equally spaced and increasing")
    return float(step)


def riemann_l2_norm(values: ArrayLike, grid: ArrayLike) -> NDArray[np.float64]:
    """Left-endpoint Riemann approximation of the L2 norm, row-wise.

    Args:
        values: (J,) or (N, J) function values on the grid.

    Returns:
        scalar array for 1-D input, (N,) for 2-D input.
    """
    step = grid_step(grid)
    v = np.asarray(values, dtype=float)
    if v.shape[-1] != len(grid):
        raise ShapeMismatchError(f"values have {v.shape[-1]} points, grid has {len(grid)}")
    return np.sqrt(step * np.sum(v[..., :-1] ** 2, axis=-1))


def l2_distance(f: FunctionalSample, g: FunctionalSample, grid: ArrayLike) -> float:
    """Riemann-sum approximation of the L2 distance between two curves."""
    if not np.allclose(f.basis.domain, g.basis.domain, rtol=0.0, atol=1e-14):
        raise ShapeMismatchError("l2_distance needs curves on the same domain")
    diff = eval_on_grid(f, grid) - eval_on_grid(g, grid)
    return float(riemann_l2_norm(diff, grid))
