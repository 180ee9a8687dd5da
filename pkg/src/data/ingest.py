"""
Ingest - CSV to Dataset
=======================

Reads a long-format CSV (series_id, t, y, feature columns) with its schema
descriptor and returns a validated, sorted, gap-free Dataset.

Gap rule: missing time steps are inserted, the target is forward-filled
and the 'y_missing' historical indicator is set to 1 on every step whose
target was not observed. Covariates are forward-filled, and zero where no
earlier value exists.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..errors import DataError
from .features import Event, event_indicators, read_event_calendar, seasonal_kernels, us_holiday_events
from .schema import (
    MISSING_INDICATOR,
    ColumnTag,
    ColumnType,
    Dataset,
    SchemaDescriptor,
    SeriesRecord,
)

# Configure module logger
logger = logging.getLogger(__name__)

SchemaLike = Union[SchemaDescriptor, str, Path]


def _load_schema(schema: SchemaLike) -> SchemaDescriptor:
    if isinstance(schema, SchemaDescriptor):
        return schema
    return SchemaDescriptor.from_yaml(schema)


def _check_columns(frame: pd.DataFrame, schema: SchemaDescriptor) -> pd.DataFrame:
    missing = [c for c in schema.required_columns if c not in frame.columns]
    if missing:
        raise DataError(f"Dataset is missing declared columns: {missing}")
    extra = [c for c in frame.columns if c not in schema.required_columns]
    if extra:
        logger.warning(f"Ignoring undeclared columns: {extra}")
        frame = frame.drop(columns=extra)
    for name, spec in schema.columns.items():
        if spec.type == ColumnType.CATEGORICAL and spec.tag != ColumnTag.STATIC:
            raise DataError(f"Categorical column '{name}' must be tagged static (s)")
    return frame


def _integer_times(frame: pd.DataFrame, schema: SchemaDescriptor) -> pd.Series:
    times = pd.to_numeric(frame[schema.time], errors="coerce")
    bad = times.isna() | (np.floor(times) != times)
    if bad.any():
        example = frame.loc[bad, schema.time].iloc[0]
        raise DataError(
            f"Time column '{schema.time}' must hold integer steps; "
            f"irregular or non-monotone value {example!r}"
        )
    return times.astype(np.int64)


def _numeric(frame: pd.DataFrame, columns: List[str]) -> pd.DataFrame:
    out = frame[columns].apply(pd.to_numeric, errors="coerce")
    for column in columns:
        bad = out[column].isna() & frame[column].notna()
        if bad.any():
            raise DataError(f"Column '{column}' has non-numeric value {frame.loc[bad, column].iloc[0]!r}")
    return out


def _calendar_events(schema: SchemaDescriptor, data_path: Optional[Path]) -> List[Event]:
    if not schema.events:
        return []
    path = Path(schema.events)
    if not path.is_absolute() and data_path is not None:
        path = data_path.parent / path
    return read_event_calendar(path)


def _static_value(group: pd.DataFrame, column: str, series_id: str):
    values = group[column].dropna().unique()
    if len(values) > 1:
        raise DataError(f"Static column '{column}' varies within series {series_id}")
    return values[0] if len(values) else None


def build_dataset(
    frame: pd.DataFrame,
    schema: SchemaDescriptor,
    data_path: Optional[Path] = None
) -> Dataset:
    """
    Validate a long-format frame and build the Dataset.

    Raises:
        DataError: On missing columns, duplicate (series_id, t), a
            non-integer time index, non-numeric values or varying statics
    """
    frame = _check_columns(frame.copy(), schema)
    if frame.empty:
        raise DataError("Dataset has no rows")
    sid, time, target = schema.series_id, schema.time, schema.target
    frame[sid] = frame[sid].astype(str)
    frame[time] = _integer_times(frame, schema)

    duplicated = frame.duplicated([sid, time], keep=False)
    if duplicated.any():
        row = frame.loc[duplicated].iloc[0]
        raise DataError(f"Duplicate (series_id, t) = ({row[sid]}, {row[time]})")

    hist_real = schema.tagged(ColumnTag.HIST, ColumnType.REAL)
    future_real = schema.tagged(ColumnTag.FUTURE, ColumnType.REAL)
    static_cat = schema.tagged(ColumnTag.STATIC, ColumnType.CATEGORICAL)
    static_real = schema.tagged(ColumnTag.STATIC, ColumnType.REAL)
    numeric = _numeric(frame, [target] + hist_real + future_real + static_real)
    frame[numeric.columns] = numeric

    frame = frame.sort_values([sid, time], kind="mergesort")

    events = _calendar_events(schema, data_path)
    event_kinds = sorted({e.kind for e in events})
    if schema.holiday_dates and "us_holiday" not in event_kinds:
        event_kinds = sorted(event_kinds + ["us_holiday"])
    seasonal_names = []
    for season in schema.seasonal:
        seasonal_names += [f"season_{season.period}_{p}" for p in range(season.period)]

    static_levels: Dict[str, List[str]] = {
        column: sorted(frame[column].dropna().astype(str).unique().tolist()) for column in static_cat
    }

    records = []
    imputed = 0
    for series_id, group in frame.groupby(sid, sort=True):
        group = group.set_index(time)
        full = pd.RangeIndex(group.index.min(), group.index.max() + 1, name=time)
        inserted = ~full.isin(group.index)
        group = group.reindex(full)

        observed = group[target].notna().to_numpy()
        y = group[target].ffill().fillna(0.0).to_numpy(dtype=np.float64)
        last = np.flatnonzero(observed)
        if last.size:
            imputed += int((~observed[: last[-1] + 1]).sum())

        x_hist = group[hist_real].ffill().fillna(0.0)
        x_hist[MISSING_INDICATOR] = (~observed).astype(np.float64)

        blocks = [group[future_real].ffill().fillna(0.0)]
        for season in schema.seasonal:
            blocks.append(seasonal_kernels(season.period, season.width, full, "season"))
        if event_kinds:
            series_events = list(events)
            if schema.holiday_dates:
                dated = group[schema.holiday_dates].dropna()
                series_events += us_holiday_events(dated.to_numpy(), dated.index.to_numpy())
            indicators = event_indicators(series_events, full.to_numpy())
            blocks.append(indicators.reindex(columns=event_kinds, fill_value=0.0))
        x_future = pd.concat(blocks, axis=1)

        static_categorical = {}
        for column in static_cat:
            value = _static_value(group, column, series_id)
            if value is not None:
                static_categorical[column] = str(value)
        static_values = {}
        for column in static_real:
            value = _static_value(group, column, series_id)
            if value is None:
                logger.warning(f"Series {series_id} has no value for static '{column}'; using 0")
                value = 0.0
            static_values[column] = float(value)

        records.append(
            SeriesRecord(
                series_id=str(series_id),
                times=full.to_numpy(),
                y=y,
                observed=observed,
                inserted=inserted,
                x_hist=x_hist.to_numpy(dtype=np.float64),
                x_future=x_future.to_numpy(dtype=np.float64),
                static_categorical=static_categorical,
                static_real=static_values,
            )
        )

    if imputed:
        logger.warning(f"Imputed {imputed} missing target step(s) by forward fill")
    dataset = Dataset(
        records=records,
        hist_names=hist_real + [MISSING_INDICATOR],
        future_names=future_real + seasonal_names + event_kinds,
        static_levels=static_levels,
        static_real_names=static_real,
        schema=schema,
    )
    logger.info(
        f"Ingested {len(records)} series, {dataset.layout().n_hist} historical and "
        f"{dataset.layout().n_future} future columns"
    )
    return dataset


def ingest(path: Union[str, Path], schema: SchemaLike) -> Dataset:
    """
    Read a long-format CSV and its schema descriptor.

    Args:
        path: Dataset CSV
        schema: SchemaDescriptor or path to its YAML file

    Returns:
        Dataset of gap-free SeriesRecords sorted by series id
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Dataset file not found: {path}")
    schema = _load_schema(schema)
    frame = pd.read_csv(path, dtype={schema.series_id: str})
    logger.info(f"Read {len(frame)} rows from {path}")
    return build_dataset(frame, schema, data_path=path)


def export_frame(dataset: Dataset) -> pd.DataFrame:
    """Long-format frame of the source rows (inserted gap rows are left out)."""
    schema = dataset.schema
    if schema is None:
        raise DataError("Dataset has no schema to export with")
    hist_real = schema.tagged(ColumnTag.HIST, ColumnType.REAL)
    future_real = schema.tagged(ColumnTag.FUTURE, ColumnType.REAL)
    frames = []
    for record in dataset.records:
        keep = ~record.inserted
        frame = pd.DataFrame({
            schema.series_id: record.series_id,
            schema.time: record.times[keep],
            schema.target: np.where(record.observed, record.y, np.nan)[keep],
        })
        for j, column in enumerate(hist_real):
            frame[column] = record.x_hist[keep, j]
        for j, column in enumerate(future_real):
            frame[column] = record.x_future[keep, j]
        for column in schema.tagged(ColumnTag.STATIC, ColumnType.CATEGORICAL):
            frame[column] = record.static_categorical.get(column)
        for column in schema.tagged(ColumnTag.STATIC, ColumnType.REAL):
            frame[column] = record.static_real[column]
        frames.append(frame)
    columns = [schema.series_id, schema.time, schema.target] + [
        c for c in schema.columns if c in frames[0].columns
    ]
    return pd.concat(frames, ignore_index=True)[columns]


def export_dataset(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write the dataset back to long-format CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    export_frame(dataset).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.info(f"Exported {len(dataset)} series to {path}")
    return path
