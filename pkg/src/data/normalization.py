"""
Normalization - Training-Range Scaling
======================================

Targets are scaled per series, covariates with one global center/scale per
column. Every statistic is computed on the training range only, so data
after the boundary can never leak into a fitted transform.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..errors import DataError
from ..models.specs import FeatureLayout, NormalizationMode
from .schema import Dataset, SeriesRecord

# Configure module logger
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormalizationStats:
    """
    Affine target transform ``(y - center) / scale``.

    Attributes:
        center: Location
        scale: Positive spread
    """
    center: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.center) or not np.isfinite(self.scale) or self.scale <= 0.0:
            raise DataError(f"Invalid normalization stats center={self.center}, scale={self.scale}")

    def normalize(self, values):
        return (np.asarray(values, dtype=np.float64) - self.center) / self.scale

    def denormalize(self, values):
        return np.asarray(values, dtype=np.float64) * self.scale + self.center


def _positive(scale: float) -> float:
    return float(scale) if np.isfinite(scale) and scale > 0.0 else 1.0


def fit_target_stats(
    record: SeriesRecord,
    end: Optional[int] = None,
    mode: NormalizationMode = NormalizationMode.STANDARD
) -> NormalizationStats:
    """
    Fit a series' target transform on its first ``end`` rows.

    Only observed targets count. A zero spread falls back to 1.

    Args:
        record: Series
        end: Number of leading rows in the training range (defaults to
            the rows up to the last observed target)
        mode: standard (mean / std) or scale (0 / mean |y|)
    """
    end = record.target_length if end is None else end
    values = record.y[:end][record.observed[:end]]
    if values.size == 0:
        return NormalizationStats()
    if mode == NormalizationMode.SCALE:
        return NormalizationStats(center=0.0, scale=_positive(np.mean(np.abs(values))))
    return NormalizationStats(center=float(np.mean(values)), scale=_positive(np.std(values)))


def _column_stats(blocks: List[np.ndarray], width: int) -> Tuple[List[float], List[float]]:
    if width == 0:
        return [], []
    rows = [b for b in blocks if b.shape[0]]
    if not rows:
        return [0.0] * width, [1.0] * width
    stacked = np.concatenate(rows, axis=0)
    center = stacked.mean(axis=0)
    scale = stacked.std(axis=0)
    return center.tolist(), [_positive(s) for s in scale]


def fit_feature_scaling(
    dataset: Dataset,
    layout: FeatureLayout,
    train_end: Optional[int] = None
) -> FeatureLayout:
    """
    Fit global covariate scaling on the training range of every series.

    Returns:
        Copy of ``layout`` with centers and scales filled in
    """
    hist, future = [], []
    for record in dataset.records:
        end = record.training_length(train_end)
        hist.append(record.x_hist[:end])
        future.append(record.x_future[:end])
    hist_center, hist_scale = _column_stats(hist, layout.n_hist)
    future_center, future_scale = _column_stats(future, layout.n_future)
    logger.debug(f"Fitted covariate scaling on {sum(h.shape[0] for h in hist)} rows")
    return layout.model_copy(update={
        "hist_center": hist_center,
        "hist_scale": hist_scale,
        "future_center": future_center,
        "future_scale": future_scale,
    })


def scale_columns(values: np.ndarray, center: List[float], scale: List[float]) -> np.ndarray:
    """Apply a fitted column scaling to a [T, F] block."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != len(center):
        raise DataError(f"Feature block has {values.shape[-1]} columns, scaling has {len(center)}")
    if not center:
        return values.copy()
    return (values - np.asarray(center)) / np.asarray(scale)
