"""
Function-on-function linear regression with closed-form maximum likelihood.

Predictor curves X_m(s) = d_m' Psi_m(s) and the response Y(t) = c' Phi(t) are
reduced to the multivariate model c_i = B' z_i + e_i with
z_i = (d_i1' zeta_1, ..., d_iM' zeta_M), zeta_m the predictor Gram matrices.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from ..exceptions import EstimationError, ShapeMismatchError
from .basis import BasisSpec, basis_matrix, gram_matrix
from .fda_core import FunctionalDataset, FunctionalSample, center

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FofDesign:
    """Design matrix Z (N x sum K_m) plus what is needed to rebuild it for new data."""

    Z: NDArray[np.float64]
    predictor_specs: List[BasisSpec]
    predictor_means: List[NDArray[np.float64]]
    grams: List[NDArray[np.float64]]

    @property
    def n_samples(self) -> int:
        return self.Z.shape[0]


@dataclass(frozen=True, eq=False)
class FofFit:
    """A fitted model: B_hat, Sigma_hat, stored means and bases."""

    B_hat: NDArray[np.float64]
    Sigma_hat: NDArray[np.float64]
    response_mean: FunctionalSample
    predictor_specs: List[BasisSpec]
    predictor_means: List[NDArray[np.float64]]
    grams: List[NDArray[np.float64]]
    log_likelihood: Optional[float]
    n_samples: int

    @property
    def response_spec(self) -> BasisSpec:
        return self.response_mean.basis

    @property
    def block_offsets(self) -> List[int]:
        return list(np.cumsum([0] + [spec.num_basis for spec in self.predictor_specs]))


def build_design(
    predictors: Sequence[FunctionalDataset],
    means: Optional[Sequence[ArrayLike]] = None,
    grams: Optional[Sequence[ArrayLike]] = None,
) -> FofDesign:
    """Assemble Z from M predictor datasets.

    Args:
        predictors: M datasets with the same number of curves.
        means: per-predictor mean coefficients used for centering; computed
            from the data when omitted (training), supplied for new data.
        grams: per-predictor Gram matrices; computed from the bases when omitted.
    """
    if not predictors:
        raise ShapeMismatchError("at least one predictor is required")
    n = len(predictors[0])
    if any(len(p) != n for p in predictors):
        counts = [len(p) for p in predictors]
        raise ShapeMismatchError(f"predictors have differing sample counts {counts}")
    if n == 0:
        raise EstimationError("predictors contain no samples")
    if means is not None and len(means) != len(predictors):
        raise ShapeMismatchError(f"{len(means)} means supplied for {len(predictors)} predictors")
    if grams is not None and len(grams) != len(predictors):
        raise ShapeMismatchError(f"{len(grams)} Gram matrices supplied for {len(predictors)} predictors")

    blocks, used_means, used_grams = [], [], []
    for m, ds in enumerate(predictors):
        if means is None:
            centered, mean = center(ds)
            d, mu = centered.coefficients, mean.coefficients
        else:
            mu = np.asarray(means[m], dtype=float)
            if mu.shape != (ds.basis.num_basis,):
                raise ShapeMismatchError(
                    f"mean for predictor {m} has shape {mu.shape}, expected ({ds.basis.num_basis},)"
                )
            d = ds.coefficients - mu
        zeta = gram_matrix(ds.basis) if grams is None else np.asarray(grams[m], dtype=float)
        if zeta.shape != (ds.basis.num_basis, ds.basis.num_basis):
            raise ShapeMismatchError(f"Gram matrix for predictor {m} has shape {zeta.shape}")
        blocks.append(d @ zeta)
        used_means.append(mu)
        used_grams.append(zeta)

    return FofDesign(
        Z=np.hstack(blocks),
        predictor_specs=[p.basis for p in predictors],
        predictor_means=used_means,
        grams=used_grams,
    )


def _log_likelihood(sigma: NDArray[np.float64], C: NDArray[np.float64]) -> Optional[float]:
    """Gaussian log-likelihood at the ML estimate; None when Sigma_hat is singular.

    Singularity is judged against the scale of the centered response, so a
    round-off residual covariance of an exact fit counts as singular.
    """
    n, k = C.shape
    scale = np.linalg.norm(C.T @ C / n, 2)
    tol = max(n, k) * np.finfo(float).eps * scale
    if np.linalg.eigvalsh(sigma)[0] <= tol:
        return None
    _, logdet = np.linalg.slogdet(sigma)
    # tr(Sigma^-1 R'R) = tr(Sigma^-1 N Sigma) = N K at the ML estimate.
    return float(-0.5 * n * logdet - 0.5 * n * k)


def fit_ml(design: FofDesign, response: FunctionalDataset) -> FofFit:
    """Closed-form ML estimates B_hat = (Z'Z)^+ Z'C, Sigma_hat = R'R / N."""
    n = len(response)
    if n == 0:
        raise EstimationError("cannot fit a model on zero samples")
    if design.n_samples != n:
        raise ShapeMismatchError(
            f"design has {design.n_samples} rows but the response has {n} curves"
        )
    centered, mean = center(response)
    C = centered.coefficients
    Z = design.Z
    # scipy's default cutoff is max(dim) * eps * sigma_max.
    B_hat = scipy.linalg.pinv(Z.T @ Z) @ Z.T @ C
    residuals = C - Z @ B_hat
    sigma = residuals.T @ residuals / n
    sigma = 0.5 * (sigma + sigma.T)
    loglik = _log_likelihood(sigma, C)
    if loglik is None:
        logger.debug("Residual covariance is singular; log-likelihood not reported")
    return FofFit(
        B_hat=B_hat,
        Sigma_hat=sigma,
        response_mean=mean,
        predictor_specs=list(design.predictor_specs),
        predictor_means=list(design.predictor_means),
        grams=list(design.grams),
        log_likelihood=loglik,
        n_samples=n,
    )


def check_predictors(fit: FofFit, predictors: Sequence[FunctionalDataset]) -> None:
    if len(predictors) != len(fit.predictor_specs):
        raise ShapeMismatchError(
            f"model was trained on {len(fit.predictor_specs)} predictors, got {len(predictors)}"
        )
    for m, (ds, spec) in enumerate(zip(predictors, fit.predictor_specs)):
        if ds.basis != spec:
            raise ShapeMismatchError(f"predictor {m} is not on the training basis")


def design_for(
    fit: FofFit,
    predictors: Sequence[FunctionalDataset],
    means: Optional[Sequence[ArrayLike]] = None,
) -> FofDesign:
    """Design matrix for new data, centered with the training means unless overridden."""
    check_predictors(fit, predictors)
    return build_design(
        predictors,
        means=fit.predictor_means if means is None else means,
        grams=fit.grams,
    )


def predict_coefficients(fit: FofFit, design: FofDesign) -> NDArray[np.float64]:
    """Centered predicted response coefficients Z_new B_hat."""
    if design.Z.shape[1] != fit.B_hat.shape[0]:
        raise ShapeMismatchError(
            f"design has {design.Z.shape[1]} columns, B_hat has {fit.B_hat.shape[0]} rows"
        )
    return design.Z @ fit.B_hat


def predict(fit: FofFit, new_predictors: Sequence[FunctionalDataset]) -> FunctionalDataset:
    """Predicted response curves Z_new B_hat + mean response."""
    design = design_for(fit, new_predictors)
    coefs = predict_coefficients(fit, design) + fit.response_mean.coefficients
    return FunctionalDataset(coefs, fit.response_spec)


def _block(fit: FofFit, m: int) -> NDArray[np.float64]:
    if not 0 <= m < len(fit.predictor_specs):
        raise IndexError(f"predictor index {m} out of range for {len(fit.predictor_specs)} predictors")
    offsets = fit.block_offsets
    return fit.B_hat[offsets[m]:offsets[m + 1], :]


def coefficient_surface_grid(
    fit: FofFit, m: int, s_grid: ArrayLike, t_grid: ArrayLike
) -> NDArray[np.float64]:
    """beta_m(s, t) = Psi_m(s)' B_m Phi(t) on a grid; shape (len(s_grid), len(t_grid))."""
    B_m = _block(fit, m)
    psi = basis_matrix(fit.predictor_specs[m], s_grid)
    phi = basis_matrix(fit.response_spec, t_grid)
    return psi @ B_m @ phi.T


def coefficient_surface(fit: FofFit, m: int, s: float, t: float) -> float:
    """The m-th estimated coefficient surface at one point (s, t)."""
    return float(coefficient_surface_grid(fit, m, [s], [t])[0, 0])
