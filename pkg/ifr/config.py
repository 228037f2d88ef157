# config.py
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Environment settings. Only the master seed may come from the environment."""

    model_config = SettingsConfigDict(
        env_prefix="IFR_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    seed: Optional[int] = None


def load_settings() -> Settings:
    """Load settings from IFR_* environment variables and .env"""
    return Settings()


# Column order of every CSV the package writes; never reordered.
PANEL_COLUMNS = ["entity", "time", "variable", "lower", "upper"]
PREDICTION_COLUMNS = ["entity", "time", "variable", "lower", "upper"]
BAND_COLUMNS = [
    "entity", "time", "variable",
    "lower_band_low", "lower_band_high", "upper_band_low", "upper_band_high",
]
METRICS_COLUMNS = [
    "case", "replicate", "model", "amse_lower", "amse_upper",
    "cp_lower", "cp_upper", "inverted_points", "raw_inverted_points",
]
EVALUATION_COLUMNS = [
    "repeat", "model", "amse_lower", "amse_upper", "cp_lower", "cp_upper",
]
SUMMARY_KEYS = ["model", "case", "metric", "median", "q1", "q3", "n_replicates"]
