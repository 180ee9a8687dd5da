"""
Synthetic - Benchmark With Known Conditional Quantiles
======================================================

Generates seasonal, heteroskedastic series with planned spikes:

    y_t = a_i + b_i sin(2 pi t / P) + spike_i(t) + eps_t
    eps_t ~ sigma_i(t) * noise,  sigma_i(t) = s_i (1 + 0.5 |sin(2 pi t / P)|)

The noise is standard normal, or Student-t with 3 degrees of freedom for
a heavy-tailed variant. Spikes are listed in the future-known 'spike'
column, so the conditional quantile at level q is exactly
``mean_i(t) + sigma_i(t) * F^-1(q)`` and is written to an oracle sidecar.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd
from scipy.stats import norm, t as student_t

from ..errors import ArgumentError, DataError
from ..models.grid import ForecastGrid, quantile_column
from ..seeding import named_stream
from .ingest import build_dataset
from .schema import ColumnSpec, ColumnTag, ColumnType, Dataset, SchemaDescriptor

# Configure module logger
logger = logging.getLogger(__name__)

STUDENT_T_DOF = 3
DEFAULT_ORACLE_LEVELS = (0.1, 0.5, 0.9)


class NoiseKind(str, Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"


@dataclass
class SyntheticBenchmark:
    """
    Generated dataset plus its exact conditional quantiles.

    Attributes:
        frame: Long-format data (series_id, t, y, season_sin, season_cos, spike, group)
        schema: Descriptor for ``frame``
        oracle: series_id, t, mean, sigma and one q<level> column per level
        noise: Noise family used
    """
    frame: pd.DataFrame
    schema: SchemaDescriptor
    oracle: pd.DataFrame
    noise: NoiseKind

    def dataset(self) -> Dataset:
        return build_dataset(self.frame, self.schema)


def benchmark_schema() -> SchemaDescriptor:
    return SchemaDescriptor(
        series_id="series_id",
        time="t",
        target="y",
        columns={
            "season_sin": ColumnSpec(tag=ColumnTag.FUTURE),
            "season_cos": ColumnSpec(tag=ColumnTag.FUTURE),
            "spike": ColumnSpec(tag=ColumnTag.FUTURE),
            "group": ColumnSpec(tag=ColumnTag.STATIC, type=ColumnType.CATEGORICAL),
        },
    )


def noise_quantile(levels, noise: NoiseKind = NoiseKind.GAUSSIAN) -> np.ndarray:
    """Inverse CDF of the unit noise at the given levels."""
    levels = np.asarray(levels, dtype=np.float64)
    if np.any((levels <= 0.0) | (levels >= 1.0)):
        raise ArgumentError(f"Quantile levels must lie in (0, 1), got {levels.tolist()}")
    if NoiseKind(noise) == NoiseKind.STUDENT_T:
        return student_t.ppf(levels, STUDENT_T_DOF)
    return norm.ppf(levels)


def synthesize_benchmark(
    seed: int,
    n_series: int,
    length: int,
    period: int = 52,
    spike_rate: float = 0.05,
    spike_magnitude: float = 3.0,
    noise: Union[NoiseKind, str] = NoiseKind.GAUSSIAN,
    noise_scale: float = 1.0,
    n_groups: int = 3,
    oracle_levels: Sequence[float] = DEFAULT_ORACLE_LEVELS
) -> SyntheticBenchmark:
    """
    Generate the benchmark.

    Each series draws its parameters from its own named stream, so series i
    is identical whatever n_series is.

    Args:
        seed: Run seed
        n_series: Number of series (>= 1)
        length: Steps per series, times 1..length
        period: Seasonal period P
        spike_rate: Probability of a planned spike at each step
        spike_magnitude: Spike size in units of the seasonal amplitude b_i
        noise: gaussian or student_t
        noise_scale: Multiplier on every s_i
        n_groups: Levels of the static 'group' column
        oracle_levels: Levels written to the oracle sidecar

    Returns:
        SyntheticBenchmark
    """
    if n_series < 1 or length < 2:
        raise ArgumentError(f"Need n_series >= 1 and length >= 2, got {n_series}, {length}")
    if period < 2:
        raise ArgumentError(f"Period must be >= 2, got {period}")
    if not 0.0 <= spike_rate <= 1.0:
        raise ArgumentError(f"Spike rate must be in [0, 1], got {spike_rate}")
    noise = NoiseKind(noise)
    levels = sorted(float(q) for q in oracle_levels)
    unit_quantiles = noise_quantile(levels, noise)

    times = np.arange(1, length + 1)
    season = np.sin(2.0 * np.pi * times / period)
    season_cos = np.cos(2.0 * np.pi * times / period)

    frames, oracles = [], []
    for i in range(n_series):
        rng = named_stream(seed, "synthetic", i)
        level = rng.uniform(5.0, 15.0)
        amplitude = rng.uniform(1.0, 3.0)
        spread = noise_scale * rng.uniform(0.2, 1.0)
        spikes = (rng.random(length) < spike_rate).astype(np.float64)
        if noise == NoiseKind.STUDENT_T:
            draws = rng.standard_t(STUDENT_T_DOF, size=length)
        else:
            draws = rng.standard_normal(length)

        mean = level + amplitude * season + spike_magnitude * amplitude * spikes
        sigma = spread * (1.0 + 0.5 * np.abs(season))
        series_id = f"s{i:04d}"
        frames.append(pd.DataFrame({
            "series_id": series_id,
            "t": times,
            "y": mean + sigma * draws,
            "season_sin": season,
            "season_cos": season_cos,
            "spike": spikes,
            "group": f"g{i % n_groups}",
        }))
        oracle = pd.DataFrame({"series_id": series_id, "t": times, "mean": mean, "sigma": sigma})
        for q, z in zip(levels, unit_quantiles):
            oracle[quantile_column(q)] = mean + sigma * z
        oracles.append(oracle)

    logger.info(f"Synthesized {n_series} series of length {length} ({noise.value} noise)")
    return SyntheticBenchmark(
        frame=pd.concat(frames, ignore_index=True),
        schema=benchmark_schema(),
        oracle=pd.concat(oracles, ignore_index=True),
        noise=noise,
    )


def write_benchmark(benchmark: SyntheticBenchmark, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write data.csv, schema.yaml and oracle.csv into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "data": out_dir / "data.csv",
        "schema": out_dir / "schema.yaml",
        "oracle": out_dir / "oracle.csv",
    }
    benchmark.frame.to_csv(paths["data"], index=False, float_format="%.17g", lineterminator="\n")
    benchmark.schema.to_yaml(paths["schema"])
    benchmark.oracle.to_csv(paths["oracle"], index=False, float_format="%.17g", lineterminator="\n")
    logger.info(f"Wrote benchmark files to {out_dir}")
    return paths


def oracle_grids(
    oracle: pd.DataFrame,
    fcts: Sequence[int],
    horizon: int,
    levels: Sequence[float] = DEFAULT_ORACLE_LEVELS
) -> List[ForecastGrid]:
    """
    Exact conditional-quantile grids for every series at each FCT.

    Series without K oracle rows after an FCT are skipped.
    """
    columns = [quantile_column(q) for q in levels]
    missing = [c for c in columns if c not in oracle.columns]
    if missing:
        raise DataError(f"Oracle sidecar lacks levels {missing}")
    grids = []
    for series_id, group in oracle.groupby("series_id", sort=True):
        table = group.set_index("t")[columns]
        for fct in fcts:
            wanted = np.arange(fct + 1, fct + horizon + 1)
            if not np.isin(wanted, table.index).all():
                continue
            grids.append(ForecastGrid(
                values=table.loc[wanted].to_numpy(dtype=np.float64),
                quantiles=list(levels),
                creation_time=int(fct),
                series_id=str(series_id),
            ))
    return grids
