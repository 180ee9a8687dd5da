"""
Interpolation - Percentile Grids from a Few Quantiles
=====================================================

A model trained on a handful of levels (e.g. 0.01, 0.25, 0.5, 0.75, 0.99)
is turned into the full 99-percentile grid by piecewise-linear
interpolation in q. Requested levels outside the trained range are
refused rather than extrapolated.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from ..errors import ArgumentError, ShapeError
from ..models.grid import ForecastGrid

# Configure module logger
logger = logging.getLogger(__name__)

PERCENTILE_LEVELS = tuple(np.arange(1, 100) / 100.0)

_TOLERANCE = 1e-12


def interpolate_percentiles(values, levels: Sequence[float], targets: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Linear interpolation of quantile forecasts in q.

    Args:
        values: Knot values [..., Q] (one row per horizon, or a single row)
        levels: Knot levels, strictly increasing
        targets: Levels to produce (default 0.01, 0.02, ..., 0.99)

    Returns:
        Array [..., len(targets)]

    Raises:
        ArgumentError: If a target lies outside [levels[0], levels[-1]]

    Example:
        >>> interpolate_percentiles([0, 24, 50, 76, 98], [0.01, 0.25, 0.5, 0.75, 0.99], [0.375])
        array([37.])
    """
    levels = np.asarray(levels, dtype=np.float64)
    targets = np.asarray(PERCENTILE_LEVELS if targets is None else targets, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != levels.size:
        raise ShapeError(f"Knot values {values.shape} do not match {levels.size} levels")
    if np.any(np.diff(levels) <= 0):
        raise ArgumentError("Knot levels must be strictly increasing")
    outside = targets[(targets < levels[0] - _TOLERANCE) | (targets > levels[-1] + _TOLERANCE)]
    if outside.size:
        raise ArgumentError(
            f"Levels {outside.tolist()} lie outside the trained range [{levels[0]:g}, {levels[-1]:g}]; "
            f"extrapolation is refused"
        )
    targets = np.clip(targets, levels[0], levels[-1])
    rows = values.reshape(-1, levels.size)
    result = np.stack([np.interp(targets, levels, row) for row in rows])
    return result.reshape(values.shape[:-1] + (targets.size,))


def interpolate_grid(grid: ForecastGrid, targets: Optional[Sequence[float]] = None) -> ForecastGrid:
    """ForecastGrid at the requested levels (default: all 99 percentiles)."""
    targets = list(PERCENTILE_LEVELS if targets is None else targets)
    values = interpolate_percentiles(grid.values, grid.quantiles, targets)
    logger.debug(f"Interpolated grid {grid.series_id}@{grid.creation_time} to {len(targets)} levels")
    return ForecastGrid(values=values, quantiles=targets, creation_time=grid.creation_time, series_id=grid.series_id)
