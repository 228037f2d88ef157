"""
Validated configuration models for simulations, evaluations and fits
"""
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..fda.interval_models import ModelKind, ModelOptions

ALL_MODELS = [ModelKind.FLM, ModelKind.CM, ModelKind.CRM, ModelKind.BCRM, ModelKind.MCM]


def parse_models(value) -> List[ModelKind]:
    """Accept 'flm,cm' strings, lists of names, or ModelKind values."""
    if isinstance(value, str):
        value = [part for part in value.split(",") if part.strip()]
    models = [ModelKind.parse(v) for v in value]
    if not models:
        raise ValueError("at least one model is required")
    return list(dict.fromkeys(models))


class SimCase(BaseModel):
    """Uniform offset bounds for the response (a, b) and predictor (c, d) ranges"""

    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=1, description="Case number")
    a: float = Field(..., description="Lower bound of the response range offset")
    b: float = Field(..., description="Upper bound of the response range offset")
    c: float = Field(..., description="Lower bound of the predictor range offset")
    d: float = Field(..., description="Upper bound of the predictor range offset")

    @model_validator(mode="after")
    def _check_bounds(self) -> "SimCase":
        if not self.a < self.b:
            raise ValueError(f"response offset bounds need a < b, got ({self.a}, {self.b})")
        if not self.c < self.d:
            raise ValueError(f"predictor offset bounds need c < d, got ({self.c}, {self.d})")
        return self

    @property
    def label(self) -> str:
        return f"Case-{self.index}"


SIM_CASES: Dict[int, SimCase] = {
    1: SimCase(index=1, a=1.0, b=1.5, c=1.0, d=1.5),
    2: SimCase(index=2, a=1.0, b=3.0, c=1.0, d=3.0),
    3: SimCase(index=3, a=3.0, b=5.0, c=5.0, d=8.0),
    4: SimCase(index=4, a=8.0, b=20.0, c=6.0, d=15.0),
}


def get_case(index: int) -> SimCase:
    try:
        return SIM_CASES[int(index)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown simulation case {index!r}; expected one of {sorted(SIM_CASES)}") from None


class SimConfig(BaseModel):
    """Monte Carlo simulation settings"""

    n: int = Field(200, ge=4, description="Number of generated curves per replicate")
    grid_size: int = Field(100, ge=2, description="Equally spaced points on [0, 1]")
    n_predictors: int = Field(3, ge=1, le=3, description="Functional predictors (at most 3 known surfaces)")
    num_basis: int = Field(8, ge=1, description="B-spline basis functions per curve")
    order: int = Field(4, ge=1, description="B-spline order (degree + 1)")
    noise_variance: float = Field(4.0, ge=0.0, description="Variance of response and predictor noise")
    mc: int = Field(250, ge=1, description="Monte Carlo replicates")
    train_frac: float = Field(0.5, gt=0.0, lt=1.0, description="Leading fraction of curves used for training")
    alpha: float = Field(0.05, gt=0.0, lt=1.0, description="Significance level of MCM bands")
    mcm_b: int = Field(100, ge=2, description="MCM replicates")
    seed: int = Field(0, ge=0, description="Master seed")
    n_jobs: int = Field(1, description="Parallel replicate workers (joblib)")

    @model_validator(mode="after")
    def _check_sizes(self) -> "SimConfig":
        if self.grid_size < self.num_basis:
            raise ValueError(f"grid_size ({self.grid_size}) must be >= num_basis ({self.num_basis})")
        if self.num_basis < self.order:
            raise ValueError(f"num_basis ({self.num_basis}) must be >= order ({self.order})")
        n_train = self.n_train
        if n_train < 2 or self.n - n_train < 1:
            raise ValueError(f"train/test split of {self.n} curves leaves an empty side")
        return self

    @property
    def n_train(self) -> int:
        return int(round(self.n * self.train_frac))

    def model_options(self, seed: Optional[int] = None, n_jobs: Optional[int] = None) -> ModelOptions:
        return ModelOptions(
            mcm_replicates=self.mcm_b,
            seed=self.seed if seed is None else seed,
            n_jobs=self.n_jobs if n_jobs is None else n_jobs,
        )


class RunConfig(BaseModel):
    """Settings shared by the fit, predict and evaluate commands"""

    models: List[ModelKind] = Field(default_factory=lambda: list(ALL_MODELS))
    basis_k: int = Field(10, ge=1, description="Basis functions of the common basis")
    order: int = Field(4, ge=1, description="B-spline order (degree + 1)")
    alpha: float = Field(0.05, gt=0.0, lt=1.0, description="Significance level of MCM bands")
    mcm_b: int = Field(100, ge=2, description="MCM replicates")
    train_frac: float = Field(40 / 48, gt=0.0, lt=1.0, description="Fraction of entities used for training")
    train_ids: Optional[List[str]] = Field(None, description="Explicit training entities")
    test_ids: Optional[List[str]] = Field(None, description="Explicit test entities")
    repeats: int = Field(100, ge=1, description="Random split repeats")
    seed: int = Field(0, ge=0, description="Master seed")
    n_jobs: int = Field(1, description="Parallel workers (joblib)")

    @field_validator("models", mode="before")
    @classmethod
    def _parse_models(cls, value):
        return parse_models(value)

    @model_validator(mode="after")
    def _check_split(self) -> "RunConfig":
        if self.basis_k < self.order:
            raise ValueError(f"basis_k ({self.basis_k}) must be >= order ({self.order})")
        if (self.train_ids is None) != (self.test_ids is None):
            raise ValueError("train_ids and test_ids must be given together")
        if self.train_ids is not None:
            if not self.train_ids or not self.test_ids:
                raise ValueError("explicit splits must be nonempty on both sides")
            if set(self.train_ids) & set(self.test_ids):
                raise ValueError("train_ids and test_ids overlap")
        return self

    def model_options(self, seed: Optional[int] = None, n_jobs: Optional[int] = None) -> ModelOptions:
        return ModelOptions(
            mcm_replicates=self.mcm_b,
            seed=self.seed if seed is None else seed,
            n_jobs=self.n_jobs if n_jobs is None else n_jobs,
        )
