"""
Data models for the regression API
"""
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class PanelRow(BaseModel):
    """One interval observation of a long-format panel"""

    entity: str = Field(..., description="Entity id (station, curve)")
    time: float = Field(..., description="Observation time")
    variable: str = Field(..., description="Variable name")
    lower: float = Field(..., description="Lower limit")
    upper: float = Field(..., description="Upper limit")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"entity": "station-01", "time": 1.0, "variable": "y", "lower": 14.2, "upper": 27.9}
        }
    )


class BandRow(BaseModel):
    """MCM prediction band of one entity at one time"""

    entity: str
    time: float
    variable: str
    lower_band_low: float = Field(..., description="Lower quantile of the lower limit")
    lower_band_high: float = Field(..., description="Upper quantile of the lower limit")
    upper_band_low: float = Field(..., description="Lower quantile of the upper limit")
    upper_band_high: float = Field(..., description="Upper quantile of the upper limit")


class CaseInfo(BaseModel):
    """Interval-width setting of a simulation case"""

    index: int
    label: str
    response_offset: List[float] = Field(..., description="Bounds (a, b) of the response range offset")
    predictor_offset: List[float] = Field(..., description="Bounds (c, d) of the predictor range offset")


class SimulateRequest(BaseModel):
    """Parameters of one simulated panel"""

    case: int = Field(1, ge=1, le=4, description="Simulation case 1-4")
    n: int = Field(50, ge=4, le=2000, description="Number of curves")
    grid_size: int = Field(100, ge=8, le=500, description="Grid points on [0, 1]")
    n_predictors: int = Field(3, ge=1, le=3, description="Functional predictors")
    noise_variance: float = Field(4.0, ge=0.0, description="Noise variance")
    seed: int = Field(0, ge=0, description="Master seed")


class SimulateResponse(BaseModel):
    seed: int
    case: int
    raw_inversions: int = Field(..., description="Generated cells with lower > upper, reordered in the rows")
    rows: List[PanelRow]


class PredictRequest(BaseModel):
    """Fit one model on a training panel and predict the limits of new entities"""

    model: str = Field("cm", description="flm, cm, crm, bcrm or mcm")
    response: str = Field("y", description="Response variable")
    predictors: Optional[List[str]] = Field(None, description="Predictor variables (default: all others)")
    basis_k: int = Field(10, ge=1, description="Basis functions of the common basis")
    order: int = Field(4, ge=1, description="B-spline order")
    mcm_b: int = Field(100, ge=2, le=2000, description="MCM replicates")
    alpha: Optional[float] = Field(None, gt=0.0, le=1.0, description="Return MCM bands at this level")
    seed: int = Field(0, ge=0, description="Master seed")
    train: List[PanelRow] = Field(..., description="Training panel rows")
    new: List[PanelRow] = Field(..., description="Rows with the predictor variables of the entities to predict")


class PredictResponse(BaseModel):
    model: str
    seed: int
    n_train: int
    inverted_points: int = Field(..., description="Predicted points whose ordering was enforced")
    in_sample_amse_lower: float
    in_sample_amse_upper: float
    predictions: List[PanelRow]
    band: Optional[List[BandRow]] = None
