"""
Data Package
============

Dataset schema, ingestion, covariate construction, normalisation, model
input assembly and the synthetic benchmark generator.
"""

from .schema import (
    MISSING_INDICATOR,
    ColumnSpec,
    ColumnTag,
    ColumnType,
    Dataset,
    SchemaDescriptor,
    SeasonalSpec,
    SeriesRecord,
)
from .features import Event, event_indicators, read_event_calendar, seasonal_kernels, us_holiday_events
from .normalization import NormalizationStats, fit_feature_scaling, fit_target_stats
from .ingest import build_dataset, export_dataset, export_frame, ingest
from .assembly import BatchInputs, ModelInputs, TargetMask, assemble_model_inputs, stack_inputs
from .synthetic import (
    NoiseKind,
    SyntheticBenchmark,
    oracle_grids,
    synthesize_benchmark,
    write_benchmark,
)

__all__ = [
    "MISSING_INDICATOR",
    "ColumnSpec",
    "ColumnTag",
    "ColumnType",
    "Dataset",
    "SchemaDescriptor",
    "SeasonalSpec",
    "SeriesRecord",
    "Event",
    "event_indicators",
    "read_event_calendar",
    "seasonal_kernels",
    "us_holiday_events",
    "NormalizationStats",
    "fit_feature_scaling",
    "fit_target_stats",
    "build_dataset",
    "export_dataset",
    "export_frame",
    "ingest",
    "BatchInputs",
    "ModelInputs",
    "TargetMask",
    "assemble_model_inputs",
    "stack_inputs",
    "NoiseKind",
    "SyntheticBenchmark",
    "oracle_grids",
    "synthesize_benchmark",
    "write_benchmark",
]
