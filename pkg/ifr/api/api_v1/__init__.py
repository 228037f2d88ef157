"""
API v1 router configuration
"""
from fastapi import APIRouter

from . import regression

router = APIRouter()

router.include_router(regression.router, prefix="/regression", tags=["regression"])
