"""
Features - Seasonal Kernels and Event Indicators
================================================

Builders for future-known covariates:

- seasonal_kernels: triangular kernels centred on each phase of a period
- event_indicators: one binary or numeric column per event kind
- us_holiday_events: event calendar from pandas' US federal holidays

All builders return DataFrames indexed by the integer time step.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import numpy as np
import pandas as pd
from pandas.tseries.holiday import USFederalHolidayCalendar

from ..errors import ArgumentError, DataError

# Configure module logger
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Event:
    """
    One calendar entry.

    Attributes:
        kind: Event type; becomes the column name
        time: Integer time step of the event
        magnitude: 1.0 for plain indicators, or e.g. a promotion depth
    """
    kind: str
    time: int
    magnitude: float = 1.0


def seasonal_kernels(
    period: int,
    width: int,
    times: Sequence[int],
    prefix: str = "season"
) -> pd.DataFrame:
    """
    Triangular kernels for every phase of a period.

    Column p peaks at 1 where ``t mod P == p`` and decays as ``1 - d/w``
    with the circular phase distance d, reaching 0 at d >= w.

    Args:
        period: P >= 2
        width: w >= 1
        times: Integer time steps (or phases such as day of week)
        prefix: Column name prefix

    Returns:
        DataFrame [len(times), P] with columns '<prefix>_<P>_<p>'

    Example:
        >>> seasonal_kernels(7, 1, range(7)).to_numpy()  # one-hot weekdays
    """
    if period < 2:
        raise ArgumentError(f"Seasonal period must be >= 2, got {period}")
    if width < 1:
        raise ArgumentError(f"Kernel width must be >= 1, got {width}")
    if width >= period / 2:
        logger.warning(f"Kernel width {width} >= period/2 ({period / 2}): kernels overlap fully")

    times = np.asarray(times, dtype=np.int64)
    phase = np.mod(times, period)[:, None]
    anchors = np.arange(period)[None, :]
    gap = np.abs(phase - anchors)
    distance = np.minimum(gap, period - gap)
    values = np.clip(1.0 - distance / width, 0.0, None)
    columns = [f"{prefix}_{period}_{p}" for p in range(period)]
    return pd.DataFrame(values, index=pd.Index(times, name="t"), columns=columns)


def event_indicators(events: Iterable[Event], times: Sequence[int]) -> pd.DataFrame:
    """
    One column per event kind holding the summed event magnitudes at each step.

    Future events are kept, since planned events are known ahead.
    Events outside ``times`` are dropped with a warning.

    Returns:
        DataFrame [len(times), n_kinds], columns sorted by kind
    """
    times = np.asarray(times, dtype=np.int64)
    events = list(events)
    kinds = sorted({event.kind for event in events})
    frame = pd.DataFrame(0.0, index=pd.Index(times, name="t"), columns=kinds)
    known = set(times.tolist())
    dropped = 0
    for event in events:
        if event.time not in known:
            dropped += 1
            continue
        frame.loc[event.time, event.kind] += float(event.magnitude)
    if dropped:
        span = f"[{times.min()}, {times.max()}]" if times.size else "(no time steps)"
        logger.warning(f"Ignored {dropped} event(s) outside time range {span}")
    return frame


def us_holiday_events(dates: Sequence, times: Sequence[int], kind: str = "us_holiday") -> List[Event]:
    """
    US federal holidays as events on a date-indexed series.

    A holiday is assigned to the last step whose date is on or before it,
    so weekly steps flag the week containing the holiday.

    Args:
        dates: Date of every step, increasing
        times: Integer time step of every date
        kind: Event kind / column name
    """
    dates = pd.DatetimeIndex(pd.to_datetime(list(dates)))
    times = np.asarray(times, dtype=np.int64)
    if len(dates) != len(times):
        raise DataError(f"{len(dates)} dates for {len(times)} time steps")
    if len(dates) == 0:
        return []
    if not dates.is_monotonic_increasing:
        raise DataError("Holiday dates must be increasing")

    step = dates[-1] - dates[-2] if len(dates) > 1 else pd.Timedelta(days=1)
    holidays = USFederalHolidayCalendar().holidays(start=dates[0], end=dates[-1] + step - pd.Timedelta(days=1))
    events = []
    for holiday in holidays:
        index = int(dates.searchsorted(holiday, side="right")) - 1
        if 0 <= index < len(times):
            events.append(Event(kind=kind, time=int(times[index])))
    logger.debug(f"Found {len(events)} US holiday events")
    return events


def read_event_calendar(path: Union[str, Path]) -> List[Event]:
    """Load an event calendar CSV with columns kind, time and optional magnitude."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Event calendar not found: {path}")
    frame = pd.read_csv(path)
    missing = [c for c in ("kind", "time") if c not in frame.columns]
    if missing:
        raise DataError(f"Event calendar {path} is missing columns: {missing}")
    if "magnitude" not in frame.columns:
        frame["magnitude"] = 1.0
    return [
        Event(kind=str(row.kind), time=int(row.time), magnitude=float(row.magnitude))
        for row in frame.itertuples(index=False)
    ]
