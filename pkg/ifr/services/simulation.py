"""
Monte Carlo simulation service

Generates interval-valued functional data from Gaussian-process predictors
and known coefficient surfaces, fits every requested model on the leading
curves and scores predictions of the trailing curves.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import scipy.linalg
from joblib import Parallel, delayed
from numpy.typing import ArrayLike, NDArray

from ..config import METRICS_COLUMNS, SUMMARY_KEYS
from ..connectors.panel_csv import write_csv_atomic, write_json_atomic
from ..exceptions import ConfigurationError, EstimationError, IntervalRegressionError, StudyReplicateError
from ..fda.basis import BasisSpec
from ..fda.fda_core import grid_step
from ..fda.interval_fd import IntervalFunctionalDataset, count_inversions, from_discrete
from ..fda.interval_models import ModelKind
from ..models.run_models import SimCase, SimConfig
from .evaluation import score_split

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

# Predictor centers are GP draws around this level.
PREDICTOR_LEVEL = 10.0
# Jitter added to the covariance diagonal, escalated until Cholesky succeeds.
JITTER_STEPS = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)

METRICS = ["amse_lower", "amse_upper", "cp_lower", "cp_upper"]


def gp_covariance(grid: ArrayLike) -> NDArray[np.float64]:
    """Squared-exponential covariance exp(-100 (s - s')^2) on a grid."""
    s = np.asarray(grid, dtype=float)
    diff = s[:, None] - s[None, :]
    return np.exp(-100.0 * diff ** 2)


@lru_cache(maxsize=32)
def _gp_factor(grid_key: tuple) -> NDArray[np.float64]:
    cov = gp_covariance(np.asarray(grid_key))
    eye = np.eye(cov.shape[0])
    for jitter in JITTER_STEPS:
        try:
            factor = scipy.linalg.cholesky(cov + jitter * eye, lower=True)
        except scipy.linalg.LinAlgError:
            logger.warning(f"GP covariance not positive definite with jitter {jitter:g}; escalating")
            continue
        factor.setflags(write=False)
        return factor
    raise EstimationError(
        f"Cholesky factorization of the GP covariance failed up to jitter {JITTER_STEPS[-1]:g}"
    )


def gp_sample(grid: ArrayLike, seed: SeedLike = None, size: Optional[int] = None) -> NDArray[np.float64]:
    """Zero-mean Gaussian-process draw(s) on the grid.

    Returns a (J,) vector, or a (size, J) matrix when ``size`` is given.
    ``seed`` may be an int, a SeedSequence or an existing Generator.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ConfigurationError("GP grid must be a nonempty one-dimensional array")
    factor = _gp_factor(tuple(g.tolist()))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((1 if size is None else size, g.size))
    draws = z @ factor.T
    return draws[0] if size is None else draws


def true_beta(m: int, s: ArrayLike, t: ArrayLike) -> NDArray[np.float64]:
    """Known coefficient surfaces beta_m(s, t), m in {1, 2, 3}; broadcasts over s and t."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if m == 1:
        return (1.0 - s) ** 2 * (t - 0.5) ** 2
    if m == 2:
        return np.exp(-3.0 * (s - 1.0) ** 2) * np.exp(-5.0 * (t - 0.5) ** 2)
    if m == 3:
        return (np.exp(-5.0 * (s - 0.5) ** 2 - 5.0 * (t - 0.5) ** 2)
                + 8.0 * np.exp(-5.0 * (s - 1.5) ** 2 - 5.0 * (t - 0.5) ** 2))
    raise ConfigurationError(f"no coefficient surface for predictor {m}; expected 1, 2 or 3")


def riemann_integral_operator(grid: ArrayLike, m: int) -> NDArray[np.float64]:
    """(J, J) matrix W with (x @ W)[t] = left Riemann sum of x(s) beta_m(s, t) over s."""
    g = np.asarray(grid, dtype=float)
    step = grid_step(g)
    weights = np.full(g.size, step)
    weights[-1] = 0.0
    return weights[:, None] * true_beta(m, g[:, None], g[None, :])


@dataclass(frozen=True, eq=False)
class SimulatedData:
    """One generated replicate.

    ``truth`` holds the center and range grids of the response ((N, J) each)
    and the predictors ((M, N, J) each) before predictor measurement noise.
    """

    Y: IntervalFunctionalDataset
    X: List[IntervalFunctionalDataset]
    grid: NDArray[np.float64]
    truth: Dict[str, NDArray[np.float64]]
    response_inversions: int
    predictor_inversions: int

    @property
    def raw_inversions(self) -> int:
        return self.response_inversions + self.predictor_inversions


def simulation_grid(config: SimConfig) -> NDArray[np.float64]:
    return np.linspace(0.0, 1.0, config.grid_size)


def simulation_spec(config: SimConfig) -> BasisSpec:
    return BasisSpec.clamped((0.0, 1.0), config.num_basis, config.order)


def generate(
    config: SimConfig,
    case: SimCase,
    seed: SeedLike = None,
    process_scale: float = 1.0,
) -> SimulatedData:
    """Draw one replicate of interval-valued response and predictor curves.

    Args:
        seed: defaults to ``config.seed``.
        process_scale: multiplies the GP fluctuations of the predictor centers;
            0 leaves constant predictor centers.
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    grid = simulation_grid(config)
    spec = simulation_spec(config)
    n, n_pred = config.n, config.n_predictors
    noise_sd = float(np.sqrt(config.noise_variance))

    x_center = PREDICTOR_LEVEL + process_scale * np.stack(
        [gp_sample(grid, rng, size=n) for _ in range(n_pred)]
    )
    y_center = sum(x_center[m] @ riemann_integral_operator(grid, m + 1) for m in range(n_pred))
    y_center = y_center + rng.normal(0.0, noise_sd, size=(n, grid.size))

    # One offset per curve, added to the whole center function.
    y_range = y_center + rng.uniform(case.a, case.b, size=(n, 1))
    x_range = x_center + rng.uniform(case.c, case.d, size=(n_pred, n, 1))

    y_lower, y_upper = y_center - y_range / 2.0, y_center + y_range / 2.0
    x_lower = x_center - x_range / 2.0 + rng.normal(0.0, noise_sd, size=x_center.shape)
    x_upper = x_center + x_range / 2.0 + rng.normal(0.0, noise_sd, size=x_center.shape)

    response_inversions = count_inversions(y_lower, y_upper)
    predictor_inversions = count_inversions(x_lower, x_upper)
    if response_inversions or predictor_inversions:
        logger.debug(
            f"{case.label}: generated {response_inversions} inverted response cells "
            f"and {predictor_inversions} inverted predictor cells"
        )

    Y = from_discrete(y_lower, y_upper, grid, spec, strict=False)
    X = [from_discrete(x_lower[m], x_upper[m], grid, spec, strict=False) for m in range(n_pred)]
    truth = {
        "response_center": y_center,
        "response_range": y_range,
        "predictor_center": x_center,
        "predictor_range": x_range,
    }
    return SimulatedData(
        Y=Y,
        X=X,
        grid=grid,
        truth=truth,
        response_inversions=response_inversions,
        predictor_inversions=predictor_inversions,
    )


def replicate_seed(config: SimConfig, case: SimCase, replicate: int, stream: int = 0) -> np.random.SeedSequence:
    """Seed of one replicate's stream: 0 data, 1 MCM replicates, 2 band resampling."""
    key = (case.index, replicate) if stream == 0 else (case.index, replicate, stream)
    return np.random.SeedSequence(config.seed, spawn_key=key)


def _int_seed(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1)[0])


def _run_replicate(config: SimConfig, case: SimCase, replicate: int, models: Sequence[ModelKind]) -> List[dict]:
    try:
        data = generate(config, case, seed=replicate_seed(config, case, replicate))
        # Replicates already run in parallel; MCM fits inside one stay serial.
        mcm_seed = _int_seed(replicate_seed(config, case, replicate, stream=1))
        options = config.model_options(seed=mcm_seed, n_jobs=1)
        band_seed = _int_seed(replicate_seed(config, case, replicate, stream=2))
        train, test = np.arange(config.n_train), np.arange(config.n_train, config.n)
        rows = score_split(
            data.Y.subset(train),
            [x.subset(train) for x in data.X],
            data.Y.subset(test),
            [x.subset(test) for x in data.X],
            models,
            options,
            config.alpha,
            band_seed,
        )
    except (IntervalRegressionError, ValueError, np.linalg.LinAlgError) as e:
        raise StudyReplicateError(case.index, replicate, e) from e
    for row in rows:
        row.update(case=case.index, replicate=replicate, raw_inverted_points=data.raw_inversions)
    logger.debug(f"{case.label} replicate {replicate} done")
    return rows


class MetricsReport:
    """Per-replicate metrics of a Monte Carlo study, one row per case x replicate x model.

    AMSE is the mean over test curves of the (unsquared) Riemann L2 distance
    between observed and predicted limits. CP columns are empty except for MCM.
    """

    def __init__(self, records: pd.DataFrame):
        missing = [c for c in METRICS_COLUMNS if c not in records.columns]
        if missing:
            raise ConfigurationError(f"metrics records lack columns {missing}")
        self.records = records[METRICS_COLUMNS].reset_index(drop=True)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def models(self) -> List[str]:
        return list(pd.unique(self.records["model"]))

    @property
    def cases(self) -> List[int]:
        return sorted(int(c) for c in pd.unique(self.records["case"]))

    def metric(self, model: str, case: int, metric: str) -> NDArray[np.float64]:
        rows = self.records[(self.records["model"] == model.upper()) & (self.records["case"] == case)]
        return rows[metric].dropna().to_numpy(dtype=float)

    def median(self, model: str, case: int, metric: str) -> float:
        values = self.metric(model, case, metric)
        return float(np.median(values)) if values.size else float("nan")

    def summary(self) -> List[dict]:
        """Median and quartiles of every metric per model and case."""
        entries = []
        for case in self.cases:
            for model in self.models:
                for metric in METRICS:
                    values = self.metric(model, case, metric)
                    if values.size == 0:
                        continue
                    q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75])
                    entry = {
                        "model": model,
                        "case": case,
                        "metric": metric,
                        "median": float(median),
                        "q1": float(q1),
                        "q3": float(q3),
                        "n_replicates": int(values.size),
                    }
                    entries.append({k: entry[k] for k in SUMMARY_KEYS})
        return entries

    def to_csv(self, path: Union[str, Path]) -> Path:
        return write_csv_atomic(self.records, path, columns=METRICS_COLUMNS)

    def to_json(self, path: Union[str, Path]) -> Path:
        return write_json_atomic(self.summary(), path)


def run_study(
    config: SimConfig,
    cases: Sequence[SimCase],
    models: Sequence[ModelKind],
) -> MetricsReport:
    """Run ``config.mc`` replicates for every case and collect the metrics.

    Replicate seeds depend only on (config.seed, case, replicate), so results
    do not depend on scheduling and a longer study extends a shorter one.
    """
    models = [ModelKind.parse(m) for m in models]
    if not cases:
        raise ConfigurationError("at least one simulation case is required")
    if not models:
        raise ConfigurationError("at least one model is required")

    logger.info(
        f"Monte Carlo study: cases {[c.index for c in cases]}, models "
        f"{[m.value for m in models]}, mc={config.mc}, n={config.n}, seed={config.seed}"
    )
    tasks = [(case, r) for case in cases for r in range(config.mc)]
    outputs = Parallel(n_jobs=config.n_jobs)(
        delayed(_run_replicate)(config, case, r, models) for case, r in tasks
    )

    order = {kind.value.upper(): i for i, kind in enumerate(models)}
    rows = [row for chunk in outputs for row in chunk]
    rows.sort(key=lambda row: (row["case"], row["replicate"], order[row["model"]]))
    report = MetricsReport(pd.DataFrame(rows, columns=METRICS_COLUMNS))
    logger.info(f"Monte Carlo study finished: {len(report)} result rows")
    return report
