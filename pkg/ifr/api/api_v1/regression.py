"""
Regression API endpoints: simulation cases, simulated panels and fit-and-predict
"""
import logging
from typing import List

import pandas as pd
from fastapi import APIRouter, HTTPException

from ...connectors.panel_csv import limits_frame, panel_from_frame
from ...exceptions import DataValidationError, IntervalRegressionError
from ...fda.interval_fd import enforce_ordering, from_discrete
from ...fda.interval_models import ModelKind, fit, mcm_prediction_band, predict_limits_detailed
from ...models.api_models import (
    BandRow,
    CaseInfo,
    PanelRow,
    PredictRequest,
    PredictResponse,
    SimulateRequest,
    SimulateResponse,
)
from ...models.run_models import SIM_CASES, RunConfig, SimConfig
from ...services.evaluation import in_sample_metrics, panel_datasets
from ...services.simulation import generate

logger = logging.getLogger(__name__)

router = APIRouter()


def _rows_frame(rows: List[PanelRow]) -> pd.DataFrame:
    if not rows:
        raise DataValidationError("panel has no rows")
    return pd.DataFrame([row.model_dump() for row in rows])


@router.get("/cases", response_model=List[CaseInfo])
def list_cases() -> List[CaseInfo]:
    """Interval-width settings of the simulation cases"""
    return [
        CaseInfo(index=c.index, label=c.label, response_offset=[c.a, c.b], predictor_offset=[c.c, c.d])
        for c in SIM_CASES.values()
    ]


@router.post("/simulate", response_model=SimulateResponse)
def simulate(request: SimulateRequest) -> SimulateResponse:
    """Generate one simulated interval panel (response y, predictors x1..xM)"""
    try:
        config = SimConfig(
            n=request.n,
            grid_size=request.grid_size,
            n_predictors=request.n_predictors,
            noise_variance=request.noise_variance,
            seed=request.seed,
        )
        data = generate(config, SIM_CASES[request.case])
    except (IntervalRegressionError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))

    rows = []
    limbs = [("y", data.Y)] + [(f"x{m + 1}", x) for m, x in enumerate(data.X)]
    for name, ds in limbs:
        lower, upper = enforce_ordering(ds.lower_values(), ds.upper_values())
        frame = limits_frame([f"curve-{i + 1}" for i in range(config.n)], data.grid, name, lower, upper)
        rows.extend(PanelRow(**record) for record in frame.to_dict(orient="records"))
    return SimulateResponse(seed=request.seed, case=request.case, raw_inversions=data.raw_inversions, rows=rows)


@router.post("/predict", response_model=PredictResponse)
def predict(request: PredictRequest) -> PredictResponse:
    """Fit one model on the training rows and predict the limit curves of the new rows"""
    try:
        run_config = RunConfig(
            models=[request.model],
            basis_k=request.basis_k,
            order=request.order,
            mcm_b=request.mcm_b,
            seed=request.seed,
        )
        train = panel_from_frame(_rows_frame(request.train))
        new = panel_from_frame(_rows_frame(request.new))
        predictors = request.predictors or [v for v in train.variables if v != request.response]
        Y, X = panel_datasets(train, request.response, predictors, run_config)

        kind = run_config.models[0]
        result = fit(kind, Y, X, run_config.model_options())
        metrics = in_sample_metrics(result, Y, X)

        missing = [v for v in predictors if v not in new.variables]
        if missing:
            raise DataValidationError(f"new rows lack predictor variables {missing}")
        X_new = [
            from_discrete(new.lower[v], new.upper[v], new.grid, spec)
            for v, spec in zip(predictors, result.predictor_specs)
        ]
        prediction = predict_limits_detailed(result, X_new, new.grid)

        band_rows = None
        if request.alpha is not None:
            if kind is not ModelKind.MCM:
                raise DataValidationError("prediction bands are only available for the mcm model")
            band = mcm_prediction_band(result, X_new, alpha=request.alpha, grid=new.grid, seed=request.seed)
            frame = limits_frame(new.entities, new.grid, request.response, band.lower_low, band.lower_high)
            frame = frame.rename(columns={"lower": "lower_band_low", "upper": "lower_band_high"})
            frame["upper_band_low"] = band.upper_low.ravel()
            frame["upper_band_high"] = band.upper_high.ravel()
            band_rows = [BandRow(**record) for record in frame.to_dict(orient="records")]
    except (IntervalRegressionError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Prediction failed: {e}")
        raise HTTPException(status_code=500, detail=f"Error fitting the model: {str(e)}")

    frame = limits_frame(new.entities, new.grid, request.response, prediction.lower, prediction.upper)
    return PredictResponse(
        model=kind.value,
        seed=request.seed,
        n_train=len(Y),
        inverted_points=prediction.inverted,
        in_sample_amse_lower=metrics["amse_lower"],
        in_sample_amse_upper=metrics["amse_upper"],
        predictions=[PanelRow(**record) for record in frame.to_dict(orient="records")],
        band=band_rows,
    )
