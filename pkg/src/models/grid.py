"""
Grid - Forecast Grids
=====================

ForecastGrid holds the K x Q matrix of quantile forecasts made at one
forecast creation time. This module also converts log-Gaussian head
outputs into grids, repairs quantile crossings and reads/writes the grid
CSV format (series_id, fct, horizon, q<level>...).
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.stats import norm

from ..errors import ArgumentError, DataError, ShapeError

# Configure module logger
logger = logging.getLogger(__name__)

GRID_KEY_COLUMNS = ["series_id", "fct", "horizon"]


def quantile_column(level: float) -> str:
    """Column name for a quantile level, e.g. 0.1 -> 'q0.1'."""
    return f"q{level:g}"


@dataclass
class ForecastGrid:
    """
    Quantile forecasts for horizons 1..K made at one creation time.

    Attributes:
        values: Array [K, Q]; row k-1 is horizon k
        quantiles: Levels q_1 < ... < q_Q
        creation_time: FCT t (integer time step)
        series_id: Series the grid belongs to
    """
    values: np.ndarray
    quantiles: List[float]
    creation_time: int = 0
    series_id: Optional[str] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.quantiles = [float(q) for q in self.quantiles]
        if self.values.ndim != 2 or self.values.shape[1] != len(self.quantiles):
            raise ShapeError(
                f"Grid values {self.values.shape} do not match {len(self.quantiles)} quantiles"
            )

    @property
    def horizon(self) -> int:
        return self.values.shape[0]

    def column(self, level: float) -> np.ndarray:
        """Forecasts at one quantile level for every horizon."""
        for index, q in enumerate(self.quantiles):
            if np.isclose(q, level, rtol=0.0, atol=1e-12):
                return self.values[:, index]
        raise ArgumentError(f"Quantile level {level} is not in the grid {self.quantiles}")

    def has_level(self, level: float) -> bool:
        return any(np.isclose(q, level, rtol=0.0, atol=1e-12) for q in self.quantiles)

    def target_times(self) -> np.ndarray:
        """Time index t + k for k = 1..K."""
        return self.creation_time + np.arange(1, self.horizon + 1)


def repair_crossings(grid: ForecastGrid) -> ForecastGrid:
    """
    Sort every row so forecasts are non-decreasing in q.

    Example:
        >>> repair_crossings(ForecastGrid([[5, 3, 4]], [0.1, 0.5, 0.9])).values
        array([[3., 4., 5.]])
    """
    return ForecastGrid(
        values=np.sort(grid.values, axis=1),
        quantiles=list(grid.quantiles),
        creation_time=grid.creation_time,
        series_id=grid.series_id,
    )


def quantiles_from_loggaussian(
    mu,
    sigma,
    quantiles: Sequence[float],
    creation_time: int = 0,
    series_id: Optional[str] = None
) -> ForecastGrid:
    """
    Quantiles of y when log(y + 1) ~ N(mu_k, sigma_k^2).

    ``y^(q) = exp(mu_k + sigma_k * Phi^-1(q)) - 1``

    Args:
        mu: Array [K]
        sigma: Array [K], positive
        quantiles: Levels in (0, 1)

    Raises:
        ArgumentError: If a level is outside (0, 1)
    """
    levels = np.asarray(quantiles, dtype=np.float64)
    if np.any((levels <= 0.0) | (levels >= 1.0)):
        raise ArgumentError(f"Quantile levels must lie in (0, 1), got {list(quantiles)}")
    mu = np.asarray(mu, dtype=np.float64).reshape(-1, 1)
    sigma = np.asarray(sigma, dtype=np.float64).reshape(-1, 1)
    values = np.expm1(mu + sigma * norm.ppf(levels)[None, :])
    return ForecastGrid(values=values, quantiles=list(levels), creation_time=creation_time, series_id=series_id)


# ---------------------------------------------------------------------------
# CSV io
# ---------------------------------------------------------------------------

def grids_to_frame(grids: Iterable[ForecastGrid]) -> pd.DataFrame:
    """Long table with one row per (series, fct, horizon)."""
    frames = []
    for grid in grids:
        frame = pd.DataFrame(grid.values, columns=[quantile_column(q) for q in grid.quantiles])
        frame.insert(0, "horizon", np.arange(1, grid.horizon + 1))
        frame.insert(0, "fct", grid.creation_time)
        frame.insert(0, "series_id", "" if grid.series_id is None else grid.series_id)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=GRID_KEY_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def write_grids(grids: Iterable[ForecastGrid], path: Union[str, Path]) -> Path:
    """Write grids as CSV with full float64 precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = grids_to_frame(grids)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.info(f"Wrote {len(frame)} grid rows to {path}")
    return path


def _levels_from_columns(columns: Sequence[str]) -> List[float]:
    levels = []
    for column in columns:
        if column in GRID_KEY_COLUMNS:
            continue
        if not column.startswith("q"):
            raise DataError(f"Unexpected grid column '{column}'")
        try:
            levels.append(float(column[1:]))
        except ValueError:
            raise DataError(f"Grid column '{column}' is not a quantile level") from None
    return levels


def frame_to_grids(frame: pd.DataFrame) -> List[ForecastGrid]:
    """Inverse of grids_to_frame; rows of each (series, fct) ordered by horizon."""
    missing = [c for c in GRID_KEY_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"Grid file is missing columns: {missing}")
    levels = _levels_from_columns(list(frame.columns))
    columns = [quantile_column(q) for q in levels]
    grids = []
    for (series_id, fct), group in frame.groupby(["series_id", "fct"], sort=True):
        group = group.sort_values("horizon")
        expected = np.arange(1, len(group) + 1)
        if not np.array_equal(group["horizon"].to_numpy(), expected):
            raise DataError(f"Grid for series {series_id} at fct {fct} has non-contiguous horizons")
        grids.append(
            ForecastGrid(
                values=group[columns].to_numpy(dtype=np.float64),
                quantiles=levels,
                creation_time=int(fct),
                series_id=str(series_id),
            )
        )
    return grids


def read_grids(path: Union[str, Path]) -> List[ForecastGrid]:
    """Read a grid CSV written by write_grids."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Grid file not found: {path}")
    frame = pd.read_csv(path, dtype={"series_id": str})
    return frame_to_grids(frame)
