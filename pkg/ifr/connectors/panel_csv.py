"""
Long-format CSV panels of interval-valued observations, and atomic writers
for every file the package produces.

Panel schema (header required, UTF-8, decimal point '.'):

    entity,time,variable,lower,upper
"""
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..config import PANEL_COLUMNS
from ..exceptions import DataValidationError, ShapeMismatchError
from ..fda.basis import BasisSpec
from ..fda.interval_fd import IntervalFunctionalDataset, from_discrete

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class PanelSchema:
    """Column names of a long-format panel file"""

    entity: str = "entity"
    time: str = "time"
    variable: str = "variable"
    lower: str = "lower"
    upper: str = "upper"

    @property
    def columns(self) -> List[str]:
        return [self.entity, self.time, self.variable, self.lower, self.upper]


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """Rectangular interval panel: every entity has every variable at every time.

    ``lower[variable]`` and ``upper[variable]`` are (n_entities, n_times) arrays.
    """

    entities: List[str]
    grid: NDArray[np.float64]
    variables: List[str]
    lower: Dict[str, NDArray[np.float64]]
    upper: Dict[str, NDArray[np.float64]]

    def __post_init__(self):
        shape = (len(self.entities), len(self.grid))
        for v in self.variables:
            if v not in self.lower or v not in self.upper:
                raise ShapeMismatchError(f"variable {v!r} lacks lower or upper values")
            if self.lower[v].shape != shape or self.upper[v].shape != shape:
                raise ShapeMismatchError(f"variable {v!r} values are not {shape}")

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    def subset(self, entity_ids: Sequence[str]) -> "PanelDataset":
        index = {e: i for i, e in enumerate(self.entities)}
        missing = [e for e in entity_ids if e not in index]
        if missing:
            raise DataValidationError(f"unknown entities {missing[:5]}")
        rows = [index[e] for e in entity_ids]
        return PanelDataset(
            entities=list(entity_ids),
            grid=self.grid,
            variables=list(self.variables),
            lower={v: self.lower[v][rows] for v in self.variables},
            upper={v: self.upper[v][rows] for v in self.variables},
        )

    def to_frame(self) -> pd.DataFrame:
        """Long-format frame ordered by entity, then variable, then time."""
        n_e, n_t = len(self.entities), len(self.grid)
        frames = []
        for v in self.variables:
            frames.append(pd.DataFrame({
                "entity": np.repeat(self.entities, n_t),
                "time": np.tile(self.grid, n_e),
                "variable": v,
                "lower": self.lower[v].ravel(),
                "upper": self.upper[v].ravel(),
                "_entity_pos": np.repeat(np.arange(n_e), n_t),
                "_variable_pos": self.variables.index(v),
            }))
        frame = pd.concat(frames, ignore_index=True)
        frame = frame.sort_values(["_entity_pos", "_variable_pos", "time"], kind="mergesort")
        return frame[PANEL_COLUMNS].reset_index(drop=True)


def _rows(mask: pd.Series, limit: int = 5) -> str:
    # File line numbers: header is line 1.
    lines = (mask[mask].index.to_numpy() + 2).tolist()
    shown = ", ".join(str(n) for n in lines[:limit])
    return shown + (f" (and {len(lines) - limit} more)" if len(lines) > limit else "")


def panel_from_frame(frame: pd.DataFrame, schema: PanelSchema = PanelSchema()) -> PanelDataset:
    """Validate a long-format frame and reshape it into a PanelDataset."""
    missing_cols = [c for c in schema.columns if c not in frame.columns]
    if missing_cols:
        raise DataValidationError(f"panel is missing columns {missing_cols}; expected {schema.columns}")

    df = frame[schema.columns].copy()
    df.columns = PANEL_COLUMNS
    df = df.reset_index(drop=True)
    for col in ("entity", "variable"):
        df[col] = df[col].where(df[col].isna(), df[col].astype(str).str.strip())
        df.loc[df[col] == "", col] = np.nan
    raw_numeric = df[["time", "lower", "upper"]]
    for col in ("time", "lower", "upper"):
        df[col] = pd.to_numeric(df[col], errors="coerce")

    unparsable = (df[["time", "lower", "upper"]].isna() & raw_numeric.notna()).any(axis=1)
    if unparsable.any():
        raise DataValidationError(f"non-numeric time/lower/upper values on rows {_rows(unparsable)}")
    empty = df.isna().any(axis=1)
    if empty.any():
        raise DataValidationError(f"missing cells on rows {_rows(empty)}")
    if df.empty:
        raise DataValidationError("panel has no rows")
    df["time"] = df["time"].astype(float)
    inverted = df["lower"] > df["upper"]
    if inverted.any():
        raise DataValidationError(f"lower exceeds upper on rows {_rows(inverted)}")
    duplicated = df.duplicated(["entity", "time", "variable"], keep=False)
    if duplicated.any():
        raise DataValidationError(f"duplicate (entity, time, variable) on rows {_rows(duplicated)}")

    entities = pd.unique(df["entity"]).tolist()
    variables = pd.unique(df["variable"]).tolist()
    grid = np.sort(pd.unique(df["time"]).astype(float))
    expected = len(entities) * len(variables) * len(grid)
    if len(df) != expected:
        full = pd.MultiIndex.from_product([entities, grid, variables], names=["entity", "time", "variable"])
        present = pd.MultiIndex.from_frame(df[["entity", "time", "variable"]])
        absent = full.difference(present)
        first = absent[0] if len(absent) else None
        raise DataValidationError(
            f"ragged panel: {len(absent)} (entity, time, variable) combinations missing, "
            f"first is {first}"
        )

    lower, upper = {}, {}
    for v in variables:
        sub = df[df["variable"] == v]
        lower[v] = sub.pivot(index="entity", columns="time", values="lower").reindex(
            index=entities, columns=grid).to_numpy(dtype=float)
        upper[v] = sub.pivot(index="entity", columns="time", values="upper").reindex(
            index=entities, columns=grid).to_numpy(dtype=float)
    return PanelDataset(entities=entities, grid=grid, variables=variables, lower=lower, upper=upper)


def load_panel(path: PathLike, schema: PanelSchema = PanelSchema()) -> PanelDataset:
    """Read and validate a long-format interval panel CSV."""
    try:
        frame = pd.read_csv(path, encoding="utf-8", dtype={schema.entity: str, schema.variable: str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataValidationError(f"cannot parse panel {path}: {e}") from e
    panel = panel_from_frame(frame, schema)
    logger.info(
        f"Loaded panel {path}: {panel.n_entities} entities, {len(panel.grid)} times, "
        f"variables {panel.variables}"
    )
    return panel


def _atomic_target(path: PathLike) -> Tuple[Path, int, str]:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    return target, fd, tmp


def write_text_atomic(text: str, path: PathLike) -> Path:
    target, fd, tmp = _atomic_target(path)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def write_csv_atomic(frame: pd.DataFrame, path: PathLike, columns: Optional[List[str]] = None) -> Path:
    """Write a frame as CSV through a temporary file and rename."""
    text = frame.to_csv(index=False, columns=columns, lineterminator="\n")
    target = write_text_atomic(text, path)
    logger.info(f"Wrote {target} ({len(frame)} rows)")
    return target


def write_json_atomic(payload, path: PathLike) -> Path:
    target = write_text_atomic(json.dumps(payload, indent=2) + "\n", path)
    logger.info(f"Wrote {target}")
    return target


def save_panel(panel: PanelDataset, path: PathLike) -> Path:
    return write_csv_atomic(panel.to_frame(), path, columns=PANEL_COLUMNS)


def panel_spec(panel: PanelDataset, num_basis: int, order: int) -> BasisSpec:
    """Common basis over the panel's time range."""
    if len(panel.grid) < 2:
        raise DataValidationError("a panel needs at least two time points")
    return BasisSpec.clamped((float(panel.grid[0]), float(panel.grid[-1])), num_basis, order)


def panel_to_datasets(
    panel: PanelDataset,
    variables: Sequence[str],
    spec: BasisSpec,
) -> List[IntervalFunctionalDataset]:
    """Smooth each named variable onto the common basis, one dataset per variable."""
    unknown = [v for v in variables if v not in panel.variables]
    if unknown:
        raise DataValidationError(f"panel has no variables {unknown}; available {panel.variables}")
    return [from_discrete(panel.lower[v], panel.upper[v], panel.grid, spec) for v in variables]


def limits_frame(
    entities: Sequence[str],
    grid: NDArray[np.float64],
    variable: str,
    lower: NDArray[np.float64],
    upper: NDArray[np.float64],
) -> pd.DataFrame:
    """Long-format frame of predicted limit curves, one row per (entity, time)."""
    n_t = len(grid)
    return pd.DataFrame({
        "entity": np.repeat(list(entities), n_t),
        "time": np.tile(grid, len(entities)),
        "variable": variable,
        "lower": np.asarray(lower).ravel(),
        "upper": np.asarray(upper).ravel(),
    })
