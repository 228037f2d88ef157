"""
Persistence of fitted interval models.

Binary files go through joblib; a ``.json`` suffix selects a plain matrix dump
carrying every basis specification and stored mean, so ``predict`` can run in
a separate process either way.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import joblib
import numpy as np

from ..exceptions import ConfigurationError
from ..fda.basis import BasisSpec
from ..fda.fda_core import FunctionalSample
from ..fda.fof_regression import FofFit
from ..fda.interval_models import IntervalFitResult, ModelKind, ModelOptions, ResidualPool
from .panel_csv import write_json_atomic

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class StoredModel:
    """A fitted model together with the panel variables it was trained on."""

    result: IntervalFitResult
    response: str
    predictors: List[str]


def _array(value) -> Optional[list]:
    return None if value is None else np.asarray(value, dtype=float).tolist()


def _sample_to_dict(sample: FunctionalSample) -> Dict[str, Any]:
    return {"coefficients": _array(sample.coefficients), "basis": sample.basis.to_dict()}


def _sample_from_dict(data: Dict[str, Any]) -> FunctionalSample:
    return FunctionalSample(np.asarray(data["coefficients"], dtype=float), BasisSpec.from_dict(data["basis"]))


def _fit_to_dict(fit: FofFit) -> Dict[str, Any]:
    return {
        "B_hat": _array(fit.B_hat),
        "Sigma_hat": _array(fit.Sigma_hat),
        "response_mean": _sample_to_dict(fit.response_mean),
        "predictor_specs": [spec.to_dict() for spec in fit.predictor_specs],
        "predictor_means": [_array(m) for m in fit.predictor_means],
        "grams": [_array(g) for g in fit.grams],
        "log_likelihood": fit.log_likelihood,
        "n_samples": fit.n_samples,
    }


def _fit_from_dict(data: Dict[str, Any]) -> FofFit:
    return FofFit(
        B_hat=np.asarray(data["B_hat"], dtype=float),
        Sigma_hat=np.asarray(data["Sigma_hat"], dtype=float),
        response_mean=_sample_from_dict(data["response_mean"]),
        predictor_specs=[BasisSpec.from_dict(s) for s in data["predictor_specs"]],
        predictor_means=[np.asarray(m, dtype=float) for m in data["predictor_means"]],
        grams=[np.asarray(g, dtype=float) for g in data["grams"]],
        log_likelihood=data["log_likelihood"],
        n_samples=int(data["n_samples"]),
    )


def model_to_dict(stored: StoredModel) -> Dict[str, Any]:
    result = stored.result
    pool = result.residual_pool
    return {
        "format_version": FORMAT_VERSION,
        "response": stored.response,
        "predictors": list(stored.predictors),
        "kind": result.kind.value,
        "fits": {name: _fit_to_dict(f) for name, f in result.fits.items()},
        "response_means": {limb: _sample_to_dict(s) for limb, s in result.response_means.items()},
        "predictor_means": {
            limb: [_array(m) for m in means] for limb, means in result.predictor_means.items()
        },
        "response_grid": _array(result.response_grid),
        "replicate_coefficients": _array(result.replicate_coefficients),
        "residual_pool": None if pool is None else {
            "lower": _array(pool.lower),
            "upper": _array(pool.upper),
            "grid": _array(pool.grid),
        },
        "options": {
            "mcm_replicates": result.options.mcm_replicates,
            "seed": result.options.seed,
            "n_jobs": result.options.n_jobs,
        },
    }


def model_from_dict(data: Dict[str, Any]) -> StoredModel:
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported model file version {version!r}")
    pool = data.get("residual_pool")
    replicates = data.get("replicate_coefficients")
    result = IntervalFitResult(
        kind=ModelKind.parse(data["kind"]),
        fits={name: _fit_from_dict(f) for name, f in data["fits"].items()},
        response_means={limb: _sample_from_dict(s) for limb, s in data["response_means"].items()},
        predictor_means={
            limb: [np.asarray(m, dtype=float) for m in means]
            for limb, means in data["predictor_means"].items()
        },
        response_grid=np.asarray(data["response_grid"], dtype=float),
        replicate_coefficients=None if replicates is None else np.asarray(replicates, dtype=float),
        residual_pool=None if pool is None else ResidualPool(
            lower=np.asarray(pool["lower"], dtype=float),
            upper=np.asarray(pool["upper"], dtype=float),
            grid=np.asarray(pool["grid"], dtype=float),
        ),
        options=ModelOptions(**data["options"]),
    )
    return StoredModel(result=result, response=data["response"], predictors=list(data["predictors"]))


def save_fit(stored: StoredModel, path: Union[str, Path]) -> Path:
    target = Path(path)
    if target.suffix.lower() == ".json":
        return write_json_atomic(model_to_dict(stored), target)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(f".{target.name}.tmp")
    joblib.dump(stored, tmp)
    tmp.replace(target)
    logger.info(f"Saved {stored.result.kind.value.upper()} fit to {target}")
    return target


def load_fit(path: Union[str, Path]) -> StoredModel:
    source = Path(path)
    if not source.exists():
        raise ConfigurationError(f"model file {source} does not exist")
    if source.suffix.lower() == ".json":
        try:
            data = json.loads(source.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"model file {source} is not valid JSON: {e}") from e
        return model_from_dict(data)
    stored = joblib.load(source)
    if not isinstance(stored, StoredModel):
        raise ConfigurationError(f"{source} does not contain a fitted interval model")
    return stored
