"""
Rolling - Rolling Forecast-Creation-Time Evaluation
===================================================

Runs a trained model at each planned forecast creation time (FCT), using
only data at or before that time as encoder input, and scores every grid
against the realised targets. A retrain callable may be supplied to fit a
fresh model on the data before each FCT.
"""

import logging
from typing import Callable, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..data.schema import Dataset
from ..models.forecaster import MQForecaster
from ..models.grid import ForecastGrid
from .interpolation import interpolate_grid
from .metrics import MetricReport, evaluate_grids

# Configure module logger
logger = logging.getLogger(__name__)

Retrain = Callable[[Dataset], MQForecaster]


class EvaluationPlan(BaseModel):
    """
    Where and how to evaluate.

    Attributes:
        fcts: Forecast creation times, strictly increasing
        data_end: Last time step whose actuals may be scored (later terms masked)
        warmup: Minimum encoder steps before an FCT is usable
        interpolate_99: Interpolate grids to all 99 percentiles before scoring
        interval: Levels of the sharpness interval
    """
    model_config = ConfigDict(extra="forbid")

    fcts: List[int] = Field(min_length=1)
    data_end: Optional[int] = None
    warmup: int = Field(default=1, ge=1)
    interpolate_99: bool = False
    interval: tuple = (0.1, 0.9)

    @field_validator("fcts")
    @classmethod
    def _check_fcts(cls, fcts: List[int]) -> List[int]:
        if any(not a < b for a, b in zip(fcts, fcts[1:])):
            raise ValueError("forecast creation times must be strictly increasing")
        return fcts


def rolling_forecasts(
    dataset: Dataset,
    model: MQForecaster,
    plan: EvaluationPlan,
    retrain: Optional[Retrain] = None
) -> List[ForecastGrid]:
    """
    Grids for every usable (FCT, series) pair in FCT order.

    FCTs too early for the warm-up, or lacking future covariates for all K
    horizons, are skipped with a warning.
    """
    horizon = model.spec.horizon
    needs_future = model.spec.features.n_future > 0
    grids: List[ForecastGrid] = []
    for fct in plan.fcts:
        if retrain is not None:
            logger.info(f"Retraining on data up to FCT {fct}")
            model = retrain(dataset.truncated(fct))
        for record in dataset.records:
            index = record.index_of(fct)
            if index + 1 < plan.warmup or index >= len(record):
                logger.warning(f"FCT {fct} is outside the usable range of series {record.series_id}; skipped")
                continue
            if needs_future and not record.covers(fct, horizon):
                logger.warning(
                    f"Series {record.series_id} lacks future covariates for {horizon} steps after FCT {fct}; skipped"
                )
                continue
            grid = model.predict_grid(record, fct)
            grids.append(interpolate_grid(grid) if plan.interpolate_99 else grid)
    logger.info(f"Produced {len(grids)} grids over {len(plan.fcts)} FCTs")
    return grids


def rolling_evaluate(
    dataset: Dataset,
    model: MQForecaster,
    plan: EvaluationPlan,
    retrain: Optional[Retrain] = None,
    baseline: Optional[List[ForecastGrid]] = None
) -> MetricReport:
    """
    Forecast at each planned FCT and score the grids.

    Example:
        >>> plan = EvaluationPlan(fcts=[96, 100, 104], data_end=120)
        >>> report = rolling_evaluate(dataset, model, plan)
        >>> report.criterion
    """
    grids = rolling_forecasts(dataset, model, plan, retrain)
    return evaluate_grids(grids, dataset.actuals(), plan.data_end, plan.interval, baseline)
