"""
Bands - Forecast Band Figures
=============================

Draws one static SVG per series: the ground-truth line, a vertical marker
at the forecast creation time, nested quantile bands (q paired with 1 - q)
and the median line. Band edges are also written to ``bands.csv``.

SVG output is byte-stable: matplotlib's SVG hash salt is fixed and the
date metadata is dropped.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from ..models.grid import ForecastGrid  # noqa: E402

# Configure module logger
logger = logging.getLogger(__name__)

SVG_RC = {"svg.hashsalt": "mq-forecast-bands", "svg.fonttype": "none"}

# Lower edges for dense grids: every other 5 percentiles
DENSE_LOWER_LEVELS = (0.05, 0.15, 0.25, 0.35, 0.45)
DENSE_GRID_LEVELS = 20

BAND_COLOR = "#1f77b4"


def _find(levels: Sequence[float], level: float) -> Optional[int]:
    for index, q in enumerate(levels):
        if abs(q - level) <= 1e-9:
            return index
    return None


def band_pairs(levels: Sequence[float]) -> List[Tuple[float, float]]:
    """
    (lower, upper) level pairs to shade, widest first.

    Example:
        >>> band_pairs([0.1, 0.5, 0.9])
        [(0.1, 0.9)]
    """
    levels = list(levels)
    candidates = DENSE_LOWER_LEVELS if len(levels) >= DENSE_GRID_LEVELS else [q for q in levels if q < 0.5]
    pairs = []
    for low in candidates:
        i, j = _find(levels, low), _find(levels, 1.0 - low)
        if i is not None and j is not None:
            pairs.append((levels[i], levels[j]))
    return sorted(pairs)


@dataclass
class BandReport:
    """Files written and series that could not be drawn."""
    figures: List[Path] = field(default_factory=list)
    table: Optional[Path] = None
    missing: List[str] = field(default_factory=list)


def band_frame(grid: ForecastGrid) -> pd.DataFrame:
    """Band edges of one grid: series_id, fct, time, level_low, level_high, low, high."""
    rows = []
    times = grid.target_times()
    for low, high in band_pairs(grid.quantiles):
        lower, upper = grid.column(low), grid.column(high)
        for k, time in enumerate(times):
            rows.append((grid.series_id, grid.creation_time, int(time), low, high, lower[k], upper[k]))
    return pd.DataFrame(rows, columns=["series_id", "fct", "time", "level_low", "level_high", "low", "high"])


def draw_bands(grid: ForecastGrid, actuals: Optional[pd.Series] = None, history: int = 52) -> Figure:
    """
    Band figure for one grid.

    Args:
        grid: Forecast grid (levels paired around the median)
        actuals: Ground truth indexed by time step
        history: Steps of ground truth shown before the FCT
    """
    figure = Figure(figsize=(8, 4))
    axes = figure.add_subplot(1, 1, 1)
    times = grid.target_times()

    if actuals is not None:
        window = actuals[(actuals.index > grid.creation_time - history) & (actuals.index <= times[-1])]
        axes.plot(window.index.to_numpy(), window.to_numpy(), color="black", linewidth=1.0, label="actual")
    axes.axvline(grid.creation_time, color="grey", linestyle="--", linewidth=1.0)

    pairs = band_pairs(grid.quantiles)
    for depth, (low, high) in enumerate(pairs):
        alpha = 0.15 + 0.5 * (depth + 1) / (len(pairs) + 1)
        axes.fill_between(
            times, grid.column(low), grid.column(high),
            color=BAND_COLOR, alpha=alpha, linewidth=0.0,
            label=f"P{low * 100:g}-P{high * 100:g}",
        )
    if grid.has_level(0.5):
        axes.plot(times, grid.column(0.5), color=BAND_COLOR, linewidth=1.5, label="P50")

    axes.set_title(f"{grid.series_id} (FCT {grid.creation_time})")
    axes.set_xlabel("time")
    axes.legend(loc="upper left", fontsize="small")
    return figure


def save_svg(figure: Figure, path: Union[str, Path]) -> Path:
    """Write a figure as deterministic SVG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with rc_context(SVG_RC):
        figure.savefig(path, format="svg", metadata={"Date": None})
    return path


def latest_grids(grids: Sequence[ForecastGrid]) -> Dict[str, ForecastGrid]:
    """Last-FCT grid per series."""
    chosen: Dict[str, ForecastGrid] = {}
    for grid in grids:
        current = chosen.get(grid.series_id)
        if current is None or grid.creation_time > current.creation_time:
            chosen[grid.series_id] = grid
    return chosen


def write_band_report(
    grids: Sequence[ForecastGrid],
    actuals: Mapping[str, pd.Series],
    out_dir: Union[str, Path],
    series_ids: Optional[Sequence[str]] = None,
    fct: Optional[int] = None,
    history: int = 52
) -> BandReport:
    """
    Write ``<series_id>.svg`` per series and ``bands.csv``.

    Args:
        grids: Forecast grids
        actuals: series_id -> ground truth
        out_dir: Output directory
        series_ids: Series to draw (default: every series in the grids)
        fct: Creation time to draw (default: the latest grid per series)
        history: Steps of ground truth before the FCT

    Returns:
        BandReport; unknown series are listed in ``missing`` and skipped
    """
    out_dir = Path(out_dir)
    if fct is not None:
        grids = [g for g in grids if g.creation_time == fct]
    available = latest_grids(grids)
    wanted = list(series_ids) if series_ids else sorted(available)

    report = BandReport()
    frames = []
    for series_id in wanted:
        grid = available.get(series_id)
        if grid is None:
            logger.warning(f"No grid for series {series_id}; skipped")
            report.missing.append(series_id)
            continue
        figure = draw_bands(grid, actuals.get(series_id), history)
        report.figures.append(save_svg(figure, out_dir / f"{series_id}.svg"))
        frames.append(band_frame(grid))

    if frames:
        out_dir.mkdir(parents=True, exist_ok=True)
        report.table = out_dir / "bands.csv"
        pd.concat(frames, ignore_index=True).to_csv(
            report.table, index=False, float_format="%.17g", lineterminator="\n"
        )
    logger.info(f"Band report: {len(report.figures)} figure(s), {len(report.missing)} missing series")
    return report
