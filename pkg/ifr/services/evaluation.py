"""
Panel evaluation service

Repeated random train/test splits of the entities of an interval panel:
every split fits each requested model on the training entities and scores
the predicted limit curves of the held-out entities.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from numpy.typing import NDArray

from ..config import EVALUATION_COLUMNS, SUMMARY_KEYS
from ..connectors.panel_csv import PanelDataset, panel_spec, panel_to_datasets, write_csv_atomic, write_json_atomic
from ..exceptions import DataValidationError
from ..fda.fda_core import riemann_l2_norm
from ..fda.interval_fd import IntervalFunctionalDataset
from ..fda.interval_models import (
    IntervalFitResult,
    ModelKind,
    ModelOptions,
    fit,
    mcm_prediction_band,
    predict_limits_detailed,
)
from ..models.run_models import RunConfig

logger = logging.getLogger(__name__)

METRICS = ["amse_lower", "amse_upper", "cp_lower", "cp_upper"]


def amse(observed: NDArray[np.float64], predicted: NDArray[np.float64], grid: NDArray[np.float64]) -> float:
    """Mean over curves of the Riemann L2 distance between observed and predicted values."""
    return float(np.mean(riemann_l2_norm(observed - predicted, grid)))


def score_split(
    Y_train: IntervalFunctionalDataset,
    X_train: Sequence[IntervalFunctionalDataset],
    Y_test: IntervalFunctionalDataset,
    X_test: Sequence[IntervalFunctionalDataset],
    models: Sequence[ModelKind],
    options: ModelOptions,
    alpha: float,
    band_seed: int,
) -> List[dict]:
    """Fit every model on the training side and score its test predictions.

    Returns one row per model with AMSE of both limits, MCM band coverage
    (NaN for the other models) and the number of predicted points whose
    ordering had to be enforced.
    """
    grid = Y_test.grid
    observed_lower, observed_upper = Y_test.lower_values(), Y_test.upper_values()
    rows = []
    for kind in models:
        result = fit(kind, Y_train, X_train, options)
        prediction = predict_limits_detailed(result, X_test, grid)
        row = {
            "model": kind.value.upper(),
            "amse_lower": amse(observed_lower, prediction.lower, grid),
            "amse_upper": amse(observed_upper, prediction.upper, grid),
            "cp_lower": np.nan,
            "cp_upper": np.nan,
            "inverted_points": prediction.inverted,
        }
        if kind is ModelKind.MCM:
            band = mcm_prediction_band(result, X_test, alpha=alpha, grid=grid, seed=band_seed)
            row["cp_lower"], row["cp_upper"] = band.coverage(observed_lower, observed_upper)
        rows.append(row)
    return rows


def in_sample_metrics(
    result: IntervalFitResult,
    Y: IntervalFunctionalDataset,
    X: Sequence[IntervalFunctionalDataset],
) -> Dict[str, float]:
    """AMSE of a fitted model on its own training data."""
    prediction = predict_limits_detailed(result, X, Y.grid)
    return {
        "amse_lower": amse(Y.lower_values(), prediction.lower, Y.grid),
        "amse_upper": amse(Y.upper_values(), prediction.upper, Y.grid),
    }


@dataclass(frozen=True)
class Split:
    repeat: int
    train: NDArray[np.int64]
    test: NDArray[np.int64]


def make_splits(panel: PanelDataset, run_config: RunConfig) -> List[Split]:
    """Explicit ids give one split; otherwise ``repeats`` random splits of the entities."""
    if run_config.train_ids is not None:
        index = {e: i for i, e in enumerate(panel.entities)}
        unknown = [e for e in run_config.train_ids + run_config.test_ids if e not in index]
        if unknown:
            raise DataValidationError(f"split names unknown entities {unknown[:5]}")
        return [Split(
            repeat=0,
            train=np.array([index[e] for e in run_config.train_ids]),
            test=np.array([index[e] for e in run_config.test_ids]),
        )]

    n = panel.n_entities
    n_train = int(round(n * run_config.train_frac))
    if n_train < 2 or n - n_train < 1:
        raise DataValidationError(
            f"train fraction {run_config.train_frac:.3f} of {n} entities leaves an empty side"
        )
    splits = []
    for r in range(run_config.repeats):
        rng = np.random.default_rng(np.random.SeedSequence(run_config.seed, spawn_key=(r,)))
        perm = rng.permutation(n)
        splits.append(Split(repeat=r, train=np.sort(perm[:n_train]), test=np.sort(perm[n_train:])))
    return splits


def _stream_seed(seed: int, repeat: int, stream: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(repeat, stream)).generate_state(1)[0])


def _run_split(
    split: Split,
    Y: IntervalFunctionalDataset,
    X: Sequence[IntervalFunctionalDataset],
    run_config: RunConfig,
) -> List[dict]:
    options = run_config.model_options(seed=_stream_seed(run_config.seed, split.repeat, 1), n_jobs=1)
    rows = score_split(
        Y.subset(split.train),
        [x.subset(split.train) for x in X],
        Y.subset(split.test),
        [x.subset(split.test) for x in X],
        run_config.models,
        options,
        run_config.alpha,
        _stream_seed(run_config.seed, split.repeat, 2),
    )
    for row in rows:
        row["repeat"] = split.repeat
    return rows


class EvaluationReport:
    """Per-repeat test metrics of a panel evaluation, plus in-sample AMSE per model."""

    def __init__(self, records: pd.DataFrame, in_sample: Optional[pd.DataFrame] = None):
        self.records = records[EVALUATION_COLUMNS].reset_index(drop=True)
        self.in_sample = in_sample

    def __len__(self) -> int:
        return len(self.records)

    def summary(self) -> List[dict]:
        entries = []
        for model in pd.unique(self.records["model"]):
            rows = self.records[self.records["model"] == model]
            for metric in METRICS:
                values = rows[metric].dropna().to_numpy(dtype=float)
                if values.size == 0:
                    continue
                q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75])
                entry = {
                    "model": model,
                    "case": None,
                    "metric": metric,
                    "median": float(median),
                    "q1": float(q1),
                    "q3": float(q3),
                    "n_replicates": int(values.size),
                }
                entries.append({k: entry[k] for k in SUMMARY_KEYS})
        return entries

    def write(self, out_dir: Union[str, Path]) -> List[Path]:
        """evaluation.csv, evaluation_summary.json and, when present, in_sample.csv."""
        out = Path(out_dir)
        written = [
            write_csv_atomic(self.records, out / "evaluation.csv", columns=EVALUATION_COLUMNS),
            write_json_atomic(self.summary(), out / "evaluation_summary.json"),
        ]
        if self.in_sample is not None:
            written.append(write_csv_atomic(self.in_sample, out / "in_sample.csv"))
        return written


def panel_datasets(
    panel: PanelDataset,
    response: str,
    predictors: Sequence[str],
    run_config: RunConfig,
) -> Tuple[IntervalFunctionalDataset, List[IntervalFunctionalDataset]]:
    """Smooth the response and predictor variables onto one common basis."""
    if response in predictors:
        raise DataValidationError(f"variable {response!r} cannot be both response and predictor")
    if not predictors:
        raise DataValidationError("at least one predictor variable is required")
    spec = panel_spec(panel, run_config.basis_k, run_config.order)
    datasets = panel_to_datasets(panel, [response, *predictors], spec)
    return datasets[0], datasets[1:]


def evaluate_panel(
    panel: PanelDataset,
    response: str,
    predictors: Sequence[str],
    run_config: RunConfig,
) -> EvaluationReport:
    """Repeated random-split evaluation of every configured model on a panel."""
    Y, X = panel_datasets(panel, response, predictors, run_config)
    splits = make_splits(panel, run_config)
    logger.info(
        f"Evaluating {[m.value for m in run_config.models]} on {panel.n_entities} entities: "
        f"{len(splits)} split(s), {len(splits[0].train)} train / {len(splits[0].test)} test, "
        f"seed={run_config.seed}"
    )
    outputs = Parallel(n_jobs=run_config.n_jobs)(
        delayed(_run_split)(split, Y, X, run_config) for split in splits
    )
    records = pd.DataFrame([row for chunk in outputs for row in chunk], columns=EVALUATION_COLUMNS)

    in_sample_rows = []
    options = run_config.model_options()
    for kind in run_config.models:
        metrics = in_sample_metrics(fit(kind, Y, X, options), Y, X)
        in_sample_rows.append({"model": kind.value.upper(), **metrics})
    in_sample = pd.DataFrame(in_sample_rows, columns=["model", "amse_lower", "amse_upper"])
    return EvaluationReport(records, in_sample)
