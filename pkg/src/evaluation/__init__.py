"""
Evaluation Package - Scoring Forecast Grids
===========================================

1. metrics.py - quantile loss, calibration, sharpness and MetricReport
2. interpolation.py - 99-percentile interpolation
3. rolling.py - rolling forecast-creation-time evaluation
"""

from .metrics import (
    AlignedTerms,
    MetricReport,
    QuantileLossTable,
    align_actuals,
    calibration,
    evaluate_grids,
    score_quantile_loss,
    sharpness,
)
from .interpolation import PERCENTILE_LEVELS, interpolate_grid, interpolate_percentiles

__all__ = [
    "AlignedTerms",
    "MetricReport",
    "QuantileLossTable",
    "align_actuals",
    "calibration",
    "evaluate_grids",
    "score_quantile_loss",
    "sharpness",
    "PERCENTILE_LEVELS",
    "interpolate_grid",
    "interpolate_percentiles",
]
