"""
Schema - Dataset Description and Series Records
===============================================

The schema descriptor is a small YAML document naming the id, time and
target columns and tagging every covariate column as historical (h),
future-known (f) or static (s):

    series_id: series_id
    time: t
    target: y
    columns:
      season_sin: {tag: f, type: real}
      group: {tag: s, type: categorical}
    seasonal:
      - {period: 52, width: 2}

A Dataset is the validated, gap-free collection of SeriesRecords built
from a CSV file and its descriptor.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Union

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..errors import DataError
from ..models.specs import FeatureLayout

# Configure module logger
logger = logging.getLogger(__name__)

MISSING_INDICATOR = "y_missing"


class ColumnTag(str, Enum):
    """Covariate class of a column."""
    HIST = "h"
    FUTURE = "f"
    STATIC = "s"


class ColumnType(str, Enum):
    REAL = "real"
    CATEGORICAL = "categorical"


class ColumnSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tag: ColumnTag
    type: ColumnType = ColumnType.REAL


class SeasonalSpec(BaseModel):
    """Triangular seasonal kernels added as future-known columns."""
    model_config = ConfigDict(extra="forbid")

    period: int = Field(ge=2)
    width: int = Field(default=1, ge=1)


class SchemaDescriptor(BaseModel):
    """
    Column roles of a long-format dataset.

    Attributes:
        series_id: Name of the series id column
        time: Name of the integer time-step column
        target: Name of the target column
        columns: Covariate column -> tag and type
        seasonal: Seasonal kernel families derived from the time index
        holiday_dates: Optional date column; US federal holidays become a
            future-known event column
        events: Optional event calendar CSV (kind, time, magnitude)
    """
    model_config = ConfigDict(extra="forbid")

    series_id: str = "series_id"
    time: str = "t"
    target: str = "y"
    columns: Dict[str, ColumnSpec] = Field(default_factory=dict)
    seasonal: List[SeasonalSpec] = Field(default_factory=list)
    holiday_dates: Optional[str] = None
    events: Optional[str] = None

    def tagged(self, tag: ColumnTag, kind: Optional[ColumnType] = None) -> List[str]:
        """Columns with a tag (and type), in document order."""
        return [
            name for name, spec in self.columns.items()
            if spec.tag == tag and (kind is None or spec.type == kind)
        ]

    @property
    def required_columns(self) -> List[str]:
        columns = [self.series_id, self.time, self.target] + list(self.columns)
        if self.holiday_dates:
            columns.append(self.holiday_dates)
        return columns

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "SchemaDescriptor":
        """
        Load and validate a descriptor.

        Raises:
            DataError: If the file is missing, not YAML, or has an unknown
                tag, type or key
        """
        path = Path(path)
        if not path.exists():
            raise DataError(f"Schema file not found: {path}")
        try:
            document = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise DataError(f"Schema file {path} is not valid YAML: {e}") from e
        try:
            return cls.model_validate(document)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            raise DataError(f"Invalid schema {path}: {problems}") from e

    def to_yaml(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        document = self.model_dump(mode="json", exclude_defaults=False)
        path.write_text(yaml.safe_dump(document, sort_keys=False), encoding="utf-8")
        return path


@dataclass
class SeriesRecord:
    """
    One gap-free time series.

    Attributes:
        series_id: Series identifier
        times: Integer time steps, consecutive
        y: Target, forward-filled where not observed
        observed: True where the target was present in the source
        inserted: True for rows created to fill a time gap
        x_hist: Historical-only covariates [T_total, F_h]
        x_future: Future-known covariates [T_total, F_f]
        static_categorical: Static categorical column -> level
        static_real: Static real column -> value
    """
    series_id: str
    times: np.ndarray
    y: np.ndarray
    observed: np.ndarray
    x_hist: np.ndarray
    x_future: np.ndarray
    inserted: Optional[np.ndarray] = None
    static_categorical: Dict[str, str] = field(default_factory=dict)
    static_real: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.observed = np.asarray(self.observed, dtype=bool)
        length = self.times.shape[0]
        if self.inserted is None:
            self.inserted = np.zeros(length, dtype=bool)
        self.inserted = np.asarray(self.inserted, dtype=bool)
        self.x_hist = np.asarray(self.x_hist, dtype=np.float64).reshape(length, -1)
        self.x_future = np.asarray(self.x_future, dtype=np.float64).reshape(length, -1)
        for name, values in (("y", self.y), ("observed", self.observed), ("inserted", self.inserted)):
            if values.shape[0] != length:
                raise DataError(f"Series {self.series_id}: '{name}' has {values.shape[0]} rows, expected {length}")
        if length and np.any(np.diff(self.times) != 1):
            raise DataError(f"Series {self.series_id}: time index is not consecutive")
        for name, values in (("y", self.y), ("x_hist", self.x_hist), ("x_future", self.x_future)):
            if not np.all(np.isfinite(values)):
                raise DataError(f"Series {self.series_id}: '{name}' contains NaN or Inf")

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def start(self) -> int:
        return int(self.times[0])

    @property
    def target_length(self) -> int:
        """Rows up to and including the last observed target."""
        hits = np.flatnonzero(self.observed)
        return int(hits[-1]) + 1 if hits.size else 0

    def index_of(self, time: int) -> int:
        """Row index of an absolute time step (may fall outside the record)."""
        return int(time) - self.start

    def training_length(self, train_end: Optional[int] = None) -> int:
        """Rows usable for training: up to train_end and the last observed target."""
        length = self.target_length
        if train_end is not None:
            length = min(length, max(0, self.index_of(train_end) + 1))
        return length

    def covers(self, fct: int, horizon: int) -> bool:
        """True when rows exist for fct and the K steps after it."""
        index = self.index_of(fct)
        return 0 <= index and index + horizon < len(self)

    def truncated(self, end_time: int) -> "SeriesRecord":
        """Copy keeping only rows with time <= end_time."""
        stop = max(0, min(len(self), self.index_of(end_time) + 1))
        return SeriesRecord(
            series_id=self.series_id,
            times=self.times[:stop],
            y=self.y[:stop],
            observed=self.observed[:stop],
            inserted=self.inserted[:stop],
            x_hist=self.x_hist[:stop],
            x_future=self.x_future[:stop],
            static_categorical=dict(self.static_categorical),
            static_real=dict(self.static_real),
        )


@dataclass
class Dataset:
    """
    Immutable collection of series sharing one feature schema.

    Attributes:
        records: Series in id order
        hist_names: Historical-only columns (ends with the missingness flag)
        future_names: Future-known columns
        static_levels: Static categorical column -> sorted known levels
        static_real_names: Static real columns
        schema: Descriptor the dataset was built from
    """
    records: List[SeriesRecord]
    hist_names: List[str]
    future_names: List[str]
    static_levels: Dict[str, List[str]] = field(default_factory=dict)
    static_real_names: List[str] = field(default_factory=list)
    schema: Optional[SchemaDescriptor] = None

    def __post_init__(self):
        if not self.records:
            raise DataError("Dataset has no series")
        ids = [r.series_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise DataError("Dataset has duplicate series ids")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[SeriesRecord]:
        return iter(self.records)

    @property
    def series_ids(self) -> List[str]:
        return [r.series_id for r in self.records]

    def get(self, series_id: str) -> SeriesRecord:
        for record in self.records:
            if record.series_id == series_id:
                return record
        raise DataError(f"Unknown series id: {series_id}")

    def layout(self, embedding_cap: int = 16) -> FeatureLayout:
        """Unfitted feature layout of this dataset."""
        return FeatureLayout(
            hist_names=list(self.hist_names),
            future_names=list(self.future_names),
            static_categorical={k: list(v) for k, v in self.static_levels.items()},
            static_real=list(self.static_real_names),
            embedding_cap=embedding_cap,
        )

    def truncated(self, end_time: int) -> "Dataset":
        """Copy with every series cut after end_time (series left empty are dropped)."""
        records = [r.truncated(end_time) for r in self.records]
        records = [r for r in records if len(r)]
        if not records:
            raise DataError(f"No series has data at or before time {end_time}")
        return Dataset(
            records=records,
            hist_names=list(self.hist_names),
            future_names=list(self.future_names),
            static_levels={k: list(v) for k, v in self.static_levels.items()},
            static_real_names=list(self.static_real_names),
            schema=self.schema,
        )

    def actuals(self) -> Dict[str, pd.Series]:
        """Targets per series indexed by time step; NaN where unobserved."""
        return {
            r.series_id: pd.Series(np.where(r.observed, r.y, np.nan), index=r.times, dtype=np.float64)
            for r in self.records
        }
