"""
Metrics - Quantile Loss, Calibration and Sharpness
==================================================

Scores ForecastGrids against realised targets:

- quantile loss: mean pinball loss per (horizon, quantile), per-FCT means
  and totals, and their average over FCTs (the competition criterion)
- calibration: fraction of actuals at or below the q-forecast, pooled over
  every FCT and horizon, plus a per-horizon breakdown
- sharpness: mean |P_high - P_low| interval width, optionally divided by a
  baseline model's sharpness

Terms whose target time lies after ``data_end`` are masked; so are targets
recorded as NaN (unobserved). Any other missing actual is an error.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import ArgumentError, DataError
from ..models.grid import ForecastGrid, quantile_column

# Configure module logger
logger = logging.getLogger(__name__)

Actuals = Mapping[str, pd.Series]


@dataclass
class AlignedTerms:
    """
    Grids stacked against their actuals.

    Attributes:
        fcts: [N] creation time of each grid
        series_ids: [N] series of each grid
        predictions: [N, K, Q]
        actuals: [N, K] (0 where masked)
        mask: [N, K] live evaluation terms
        quantiles: Shared quantile levels
    """
    fcts: np.ndarray
    series_ids: List[str]
    predictions: np.ndarray
    actuals: np.ndarray
    mask: np.ndarray
    quantiles: List[float]

    @property
    def horizon(self) -> int:
        return self.predictions.shape[1]

    @property
    def live_terms(self) -> int:
        return int(self.mask.sum())

    def level_index(self, level: float) -> int:
        for index, q in enumerate(self.quantiles):
            if np.isclose(q, level, rtol=0.0, atol=1e-12):
                return index
        raise ArgumentError(f"Quantile level {level} is not in the grids {self.quantiles}")


def align_actuals(
    grids: Sequence[ForecastGrid],
    actuals: Actuals,
    data_end: Optional[int] = None
) -> AlignedTerms:
    """
    Stack grids and look up y_{t+k} for every term.

    Raises:
        DataError: If grids disagree on horizon or levels, a series has no
            actuals, or an actual is missing for an unmasked term
    """
    grids = list(grids)
    if not grids:
        raise DataError("No forecast grids to evaluate")
    first = grids[0]
    for grid in grids[1:]:
        if grid.horizon != first.horizon or not np.allclose(grid.quantiles, first.quantiles, rtol=0.0, atol=1e-12):
            raise DataError("Grids disagree on horizon or quantile levels")

    size, horizon = len(grids), first.horizon
    values = np.zeros((size, horizon))
    mask = np.zeros((size, horizon), dtype=bool)
    for row, grid in enumerate(grids):
        if grid.series_id not in actuals:
            raise DataError(f"No actuals for series {grid.series_id}")
        series = actuals[grid.series_id]
        times = grid.target_times()
        wanted = times if data_end is None else times[times <= data_end]
        absent = [int(t) for t in wanted if t not in series.index]
        if absent:
            raise DataError(
                f"Missing actuals for series {grid.series_id} at fct {grid.creation_time}: times {absent}"
            )
        found = series.reindex(times).to_numpy(dtype=np.float64)
        live = np.isfinite(found)
        if data_end is not None:
            live &= times <= data_end
        values[row] = np.where(live, found, 0.0)
        mask[row] = live

    return AlignedTerms(
        fcts=np.asarray([g.creation_time for g in grids], dtype=np.int64),
        series_ids=[g.series_id for g in grids],
        predictions=np.stack([g.values for g in grids]),
        actuals=values,
        mask=mask,
        quantiles=list(first.quantiles),
    )


def _pinball_terms(terms: AlignedTerms) -> np.ndarray:
    """Pinball loss [N, K, Q] (0 where masked)."""
    levels = np.asarray(terms.quantiles)
    diff = terms.actuals[..., None] - terms.predictions
    loss = np.where(diff >= 0.0, levels * diff, (levels - 1.0) * diff)
    return loss * terms.mask[..., None]


@dataclass
class QuantileLossTable:
    """
    Quantile-loss aggregates.

    Attributes:
        loss: [K, Q] mean pinball loss per horizon and quantile
        counts: [K] live terms per horizon
        fct_mean: FCT -> mean pinball loss over its live (series, k, q) terms
        fct_total: FCT -> summed pinball loss
        criterion: Average of fct_mean over FCTs
    """
    loss: np.ndarray
    counts: np.ndarray
    fct_mean: Dict[int, float]
    fct_total: Dict[int, float]
    criterion: float


def score_quantile_loss(terms: AlignedTerms) -> QuantileLossTable:
    """
    Mean pinball loss per (k, q) plus per-FCT and averaged criteria.

    Raises:
        DataError: If no term is live

    Example:
        >>> table = score_quantile_loss(align_actuals(grids, dataset.actuals()))
        >>> table.loss.shape
        (13, 3)
    """
    if terms.live_terms == 0:
        raise DataError("No live evaluation terms")
    loss = _pinball_terms(terms)
    counts = terms.mask.sum(axis=0)
    per_horizon = np.divide(
        loss.sum(axis=0), counts[:, None], out=np.full(loss.shape[1:], np.nan), where=counts[:, None] > 0
    )

    fct_mean: Dict[int, float] = {}
    fct_total: Dict[int, float] = {}
    n_levels = len(terms.quantiles)
    for fct in np.unique(terms.fcts):
        rows = terms.fcts == fct
        live = int(terms.mask[rows].sum()) * n_levels
        if live == 0:
            logger.warning(f"FCT {fct} has no live evaluation terms; left out of the criterion")
            continue
        total = float(loss[rows].sum())
        fct_total[int(fct)] = total
        fct_mean[int(fct)] = total / live
    criterion = float(np.mean(list(fct_mean.values())))
    return QuantileLossTable(loss=per_horizon, counts=counts, fct_mean=fct_mean, fct_total=fct_total, criterion=criterion)


def calibration(terms: AlignedTerms, level: float, by_horizon: bool = False):
    """
    Empirical coverage P(y <= yhat^(q)); ties count as covered.

    Returns:
        Pooled rate, or a [K] array when ``by_horizon`` (NaN where empty)

    Raises:
        DataError: If no term is live
    """
    if terms.live_terms == 0:
        raise DataError("Calibration needs at least one live evaluation term")
    column = terms.predictions[..., terms.level_index(level)]
    covered = (terms.actuals <= column) & terms.mask
    if not by_horizon:
        return float(covered.sum() / terms.mask.sum())
    counts = terms.mask.sum(axis=0)
    return np.divide(covered.sum(axis=0), counts, out=np.full(counts.shape, np.nan), where=counts > 0)


def sharpness(
    grids: Sequence[ForecastGrid],
    q_low: float = 0.1,
    q_high: float = 0.9,
    mask: Optional[np.ndarray] = None,
    by_horizon: bool = False
):
    """
    Mean absolute width |yhat^(q_high) - yhat^(q_low)| pooled over FCTs and horizons.

    Args:
        grids: Forecast grids
        q_low / q_high: Interval levels; both must be in every grid
        mask: Optional [N, K] terms to include
        by_horizon: Return a [K] array instead of the pooled value

    Raises:
        ArgumentError: If a level is absent from a grid
    """
    grids = list(grids)
    if not grids:
        raise DataError("No forecast grids for sharpness")
    widths = np.stack([np.abs(g.column(q_high) - g.column(q_low)) for g in grids])
    mask = np.ones(widths.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if by_horizon:
        counts = mask.sum(axis=0)
        return np.divide((widths * mask).sum(axis=0), counts, out=np.full(counts.shape, np.nan), where=counts > 0)
    if not mask.any():
        raise DataError("Sharpness needs at least one term")
    return float((widths * mask).sum() / mask.sum())


def _fmt(value) -> str:
    return "" if value is None else f"{value:.17g}"


@dataclass
class MetricReport:
    """
    Evaluation summary of a set of forecast grids.

    Attributes:
        quantiles: Levels scored
        loss: [K, Q] mean quantile loss
        counts: [K] live terms per horizon
        calibration: Level -> pooled coverage rate
        calibration_by_horizon: Level -> [K] coverage
        sharpness: Pooled P_high - P_low width (None when a level is missing)
        sharpness_by_horizon: [K] widths
        sharpness_ratio: sharpness / baseline sharpness (None without baseline)
        fct_mean / fct_total: Per-FCT loss aggregates
        criterion: Average of fct_mean over FCTs
    """
    quantiles: List[float]
    loss: np.ndarray
    counts: np.ndarray
    calibration: Dict[float, float]
    calibration_by_horizon: Dict[float, np.ndarray]
    sharpness: Optional[float]
    sharpness_by_horizon: Optional[np.ndarray]
    sharpness_ratio: Optional[float]
    fct_mean: Dict[int, float]
    fct_total: Dict[int, float]
    criterion: float
    interval: tuple = field(default=(0.1, 0.9))

    @property
    def horizon(self) -> int:
        return self.loss.shape[0]

    @property
    def live_terms(self) -> int:
        return int(self.counts.sum())

    def to_frame(self) -> pd.DataFrame:
        """Long format: metric, horizon, quantile, value (blank keys for pooled rows)."""
        rows = []
        for k in range(self.horizon):
            for j, q in enumerate(self.quantiles):
                rows.append(("quantile_loss", str(k + 1), f"{q:g}", _fmt(self.loss[k, j])))
        for k in range(self.horizon):
            rows.append(("count", str(k + 1), "", str(int(self.counts[k]))))
        for q in self.quantiles:
            rows.append(("calibration", "", f"{q:g}", _fmt(self.calibration[q])))
            for k, rate in enumerate(self.calibration_by_horizon[q]):
                rows.append(("calibration", str(k + 1), f"{q:g}", _fmt(rate)))
        if self.sharpness is not None:
            rows.append(("sharpness", "", "", _fmt(self.sharpness)))
            for k, width in enumerate(self.sharpness_by_horizon):
                rows.append(("sharpness", str(k + 1), "", _fmt(width)))
        if self.sharpness_ratio is not None:
            rows.append(("sharpness_ratio", "", "", _fmt(self.sharpness_ratio)))
        rows.append(("criterion", "", "", _fmt(self.criterion)))
        return pd.DataFrame(rows, columns=["metric", "horizon", "quantile", "value"])

    def horizon_frame(self) -> pd.DataFrame:
        """Per-horizon loss curves, one column per quantile plus their sum."""
        frame = pd.DataFrame(self.loss, columns=[quantile_column(q) for q in self.quantiles])
        frame.insert(0, "horizon", np.arange(1, self.horizon + 1))
        frame["total"] = self.loss.sum(axis=1)
        return frame

    def fct_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "fct": list(self.fct_mean),
                "mean_loss": list(self.fct_mean.values()),
                "total_loss": [self.fct_total[f] for f in self.fct_mean],
            }
        )

    def summary(self) -> str:
        """Human-readable summary."""
        lines = [
            f"Evaluation terms: {self.live_terms} over K={self.horizon} horizons",
            f"Criterion (mean loss averaged over {len(self.fct_mean)} FCTs): {self.criterion:.6g}",
            "",
            "Mean quantile loss (pooled over horizons):",
        ]
        pooled = (np.nan_to_num(self.loss) * self.counts[:, None]).sum(axis=0) / max(self.live_terms, 1)
        for q, value in zip(self.quantiles, pooled):
            lines.append(f"  q={q:g}: {value:.6g}")
        lines.append("")
        lines.append("Calibration (target = q):")
        for q in self.quantiles:
            lines.append(f"  q={q:g}: {self.calibration[q]:.4f}")
        if self.sharpness is not None:
            low, high = self.interval
            lines.append("")
            lines.append(f"Sharpness (P{high * 100:g} - P{low * 100:g}): {self.sharpness:.6g}")
            if self.sharpness_ratio is not None:
                lines.append(f"Sharpness ratio vs baseline: {self.sharpness_ratio:.4f}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Union[str, Path]) -> List[Path]:
        """Write metrics.csv, horizon_loss.csv, fct_loss.csv and summary.txt."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = [out_dir / "metrics.csv", out_dir / "horizon_loss.csv", out_dir / "fct_loss.csv", out_dir / "summary.txt"]
        self.to_frame().to_csv(paths[0], index=False, lineterminator="\n")
        self.horizon_frame().to_csv(paths[1], index=False, float_format="%.17g", lineterminator="\n")
        self.fct_frame().to_csv(paths[2], index=False, float_format="%.17g", lineterminator="\n")
        paths[3].write_text(self.summary(), encoding="utf-8")
        logger.info(f"Metric report written to {out_dir}")
        return paths


def evaluate_grids(
    grids: Sequence[ForecastGrid],
    actuals: Actuals,
    data_end: Optional[int] = None,
    interval: tuple = (0.1, 0.9),
    baseline: Optional[Sequence[ForecastGrid]] = None
) -> MetricReport:
    """
    Full MetricReport for a set of grids.

    Args:
        grids: Forecast grids (any mix of series and FCTs)
        actuals: series_id -> target Series indexed by time
        data_end: Last time step with usable actuals (later terms masked)
        interval: (q_low, q_high) used for sharpness
        baseline: Grids of a reference model; adds the sharpness ratio
    """
    grids = list(grids)
    terms = align_actuals(grids, actuals, data_end)
    table = score_quantile_loss(terms)
    pooled = {q: calibration(terms, q) for q in terms.quantiles}
    per_horizon = {q: calibration(terms, q, by_horizon=True) for q in terms.quantiles}

    low, high = interval
    width = width_by_horizon = ratio = None
    if all(g.has_level(low) and g.has_level(high) for g in grids):
        width = sharpness(grids, low, high, mask=terms.mask)
        width_by_horizon = sharpness(grids, low, high, mask=terms.mask, by_horizon=True)
        if baseline is not None:
            reference = sharpness(list(baseline), low, high)
            ratio = width / reference if reference > 0 else None
    else:
        logger.debug(f"Grids lack levels {low}/{high}; sharpness not reported")

    logger.info(
        f"Scored {len(grids)} grids ({terms.live_terms} live terms): criterion {table.criterion:.6g}"
    )
    return MetricReport(
        quantiles=list(terms.quantiles),
        loss=table.loss,
        counts=table.counts,
        calibration=pooled,
        calibration_by_horizon=per_horizon,
        sharpness=width,
        sharpness_by_horizon=width_by_horizon,
        sharpness_ratio=ratio,
        fct_mean=table.fct_mean,
        fct_total=table.fct_total,
        criterion=table.criterion,
        interval=(low, high),
    )
