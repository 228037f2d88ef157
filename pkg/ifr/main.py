"""
Interval-valued functional regression API
"""
import logging
import os

from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from . import __version__
from .api.api_v1 import router as api_v1_router
from .fda.interval_models import ModelKind

load_dotenv(os.path.join(os.path.dirname(os.path.dirname(__file__)), ".env"))

logger = logging.getLogger(__name__)

app = FastAPI(
    title="Interval Functional Regression API",
    version=__version__,
    description="""
    Function-on-function linear regression for interval-valued functional data.

    **Models:** FLM (separate limits), CM (centers), CRM (centers and half-ranges),
    BCRM (joint centers and half-ranges), MCM (Monte Carlo draws inside the intervals,
    with prediction bands).

    **Endpoints:**
    - `GET /api/v1/regression/cases` - simulation case settings
    - `POST /api/v1/regression/simulate` - a simulated interval panel
    - `POST /api/v1/regression/predict` - fit on training rows, predict new rows
    """,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(api_v1_router, prefix="/api/v1")


@app.get("/")
async def root():
    return {
        "name": "Interval Functional Regression API",
        "version": __version__,
        "docs": "/docs",
        "models": [kind.value for kind in ModelKind],
    }


@app.get("/health")
async def health():
    return {"status": "healthy", "version": __version__}
