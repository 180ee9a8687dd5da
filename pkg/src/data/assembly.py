"""
Assembly - Model Inputs from Series Records
===========================================

Turns one SeriesRecord into the arrays a forecaster consumes:

- encoder features at every step t: (y block, x^(h)_t, x^(f)_t), where the
  y block is y_t or the lag row (y_t, ..., y_{t-D})
- decoder future inputs for every (t, k): x^(f)_{t+k}, zero past the data
- normalised targets y_{t+k} with the target mask

The static embedding is learned, so the forecaster appends it to both
blocks itself from ``static_codes`` and ``static_reals``.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..errors import ContractError, DataError, ShapeError
from ..models.encoders import build_lag_features
from ..models.specs import EncoderKind, ModelSpec
from .normalization import NormalizationStats, scale_columns
from .schema import SeriesRecord

# Configure module logger
logger = logging.getLogger(__name__)


@dataclass
class ModelInputs:
    """
    Arrays for one series over T encoder steps.

    Attributes:
        series_id: Series identifier
        times: Time step of every encoder row [T]
        encoder_features: [T, F0] with F0 = target width + F_h + F_f
        future_features: [T, K, F_f]
        static_codes: Embedding row per static categorical (0 = unknown)
        static_reals: Static real values
        targets: Normalised y_{t+k} [T, K], zero where masked
        mask: Live loss terms [T, K]
        stats: Target normalisation of the series
    """
    series_id: str
    times: np.ndarray
    encoder_features: np.ndarray
    future_features: np.ndarray
    static_codes: np.ndarray
    static_reals: np.ndarray
    targets: np.ndarray
    mask: np.ndarray
    stats: NormalizationStats

    @property
    def length(self) -> int:
        return self.encoder_features.shape[0]

    @property
    def live_terms(self) -> int:
        return int(self.mask.sum())

    def prefix(self, steps: int) -> "ModelInputs":
        """The first ``steps`` rows; targets and mask rows are unchanged."""
        if not 1 <= steps <= self.length:
            raise ContractError(f"Prefix length {steps} outside 1..{self.length}")
        return ModelInputs(
            series_id=self.series_id,
            times=self.times[:steps],
            encoder_features=self.encoder_features[:steps],
            future_features=self.future_features[:steps],
            static_codes=self.static_codes,
            static_reals=self.static_reals,
            targets=self.targets[:steps],
            mask=self.mask[:steps],
            stats=self.stats,
        )


@dataclass
class BatchInputs:
    """ModelInputs of equal length stacked on a leading batch axis."""
    series_ids: List[str]
    times: np.ndarray
    encoder_features: np.ndarray
    future_features: np.ndarray
    static_codes: np.ndarray
    static_reals: np.ndarray
    targets: np.ndarray
    mask: np.ndarray

    @property
    def size(self) -> int:
        return self.encoder_features.shape[0]

    @property
    def length(self) -> int:
        return self.encoder_features.shape[1]


@dataclass
class TargetMask:
    """
    Live loss terms of one series over (FCT row, horizon).

    A term is live only if its target index is inside the training range
    and the target was observed there.
    """
    series_id: str
    values: np.ndarray

    @classmethod
    def build(cls, series_id: str, length: int, horizon: int, boundary: int, observed=None) -> "TargetMask":
        """mask(t, k) = t + k < boundary and y_{t+k} observed (0-based rows)."""
        index = np.arange(length)[:, None] + np.arange(1, horizon + 1)[None, :]
        values = index < boundary
        if observed is not None:
            observed = np.asarray(observed, dtype=bool)
            values &= observed[np.minimum(index, len(observed) - 1)] & (index < len(observed))
        return cls(series_id=series_id, values=values)

    @property
    def live_terms(self) -> int:
        return int(self.values.sum())


def stack_inputs(items: Sequence[ModelInputs]) -> BatchInputs:
    """Stack series of one length into a batch."""
    if not items:
        raise ContractError("Cannot stack an empty list of inputs")
    lengths = {item.length for item in items}
    if len(lengths) != 1:
        raise ShapeError(f"Batched series must share one length, got {sorted(lengths)}")
    return BatchInputs(
        series_ids=[item.series_id for item in items],
        times=np.stack([item.times for item in items]),
        encoder_features=np.stack([item.encoder_features for item in items]),
        future_features=np.stack([item.future_features for item in items]),
        static_codes=np.stack([item.static_codes for item in items]).astype(np.int64),
        static_reals=np.stack([item.static_reals for item in items]),
        targets=np.stack([item.targets for item in items]),
        mask=np.stack([item.mask for item in items]),
    )


def _static_codes(record: SeriesRecord, spec: ModelSpec) -> np.ndarray:
    codes = []
    for column, levels in spec.features.static_categorical.items():
        value = record.static_categorical.get(column)
        codes.append(levels.index(value) + 1 if value in levels else 0)
    return np.asarray(codes, dtype=np.int64)


def assemble_model_inputs(
    record: SeriesRecord,
    spec: ModelSpec,
    stats: Optional[NormalizationStats],
    length: Optional[int] = None,
    boundary: Optional[int] = None,
    require_future: bool = False
) -> ModelInputs:
    """
    Build encoder inputs, per-horizon future inputs and masked targets.

    Args:
        record: Series
        spec: Model spec with a fitted feature layout
        stats: Target normalisation fitted on the training range
        length: Encoder steps T (defaults to the record's target length)
        boundary: Rows before this index may serve as targets
            (defaults to ``length``)
        require_future: Refuse when x^(f) does not cover all K horizons
            after the last encoder step

    Returns:
        ModelInputs

    Raises:
        ContractError: If the feature layout or stats are not fitted
        DataError: If there are no encoder steps or future covariates
            are missing while required
    """
    layout = spec.features
    if stats is None or not layout.fitted:
        raise ContractError("Normalization must be fitted before assembling model inputs")
    if record.x_hist.shape[1] != layout.n_hist or record.x_future.shape[1] != layout.n_future:
        raise DataError(
            f"Series {record.series_id} has {record.x_hist.shape[1]} historical / "
            f"{record.x_future.shape[1]} future columns, model expects "
            f"{layout.hist_names} / {layout.future_names}"
        )
    length = record.target_length if length is None else length
    boundary = length if boundary is None else boundary
    horizon = spec.horizon
    total = len(record)
    if not 1 <= length <= total:
        raise DataError(f"Series {record.series_id} has no usable encoder steps (length {length})")
    if require_future and layout.n_future and length - 1 + horizon >= total:
        raise DataError(
            f"Series {record.series_id} lacks future covariates for horizons after "
            f"time {record.times[length - 1]} (needs {horizon} rows)"
        )

    y = stats.normalize(record.y)
    if spec.encoder.kind == EncoderKind.LSTM_LAG:
        y_block = build_lag_features(y[:length], spec.encoder.depth)
    else:
        y_block = y[:length, None]
    hist = scale_columns(record.x_hist, layout.hist_center, layout.hist_scale)
    future = scale_columns(record.x_future, layout.future_center, layout.future_scale)
    encoder_features = np.concatenate([y_block, hist[:length], future[:length]], axis=1)

    index = np.arange(length)[:, None] + np.arange(1, horizon + 1)[None, :]
    inside = index < total
    safe = np.where(inside, index, 0)
    future_features = np.zeros((length, horizon, layout.n_future))
    future_features[inside] = future[safe[inside]]

    mask = TargetMask.build(record.series_id, length, horizon, boundary, record.observed).values
    targets = np.where(mask, y[safe], 0.0)
    if horizon >= length:
        logger.debug(f"Series {record.series_id}: horizon {horizon} >= length {length}")

    return ModelInputs(
        series_id=record.series_id,
        times=record.times[:length].copy(),
        encoder_features=encoder_features,
        future_features=future_features,
        static_codes=_static_codes(record, spec),
        static_reals=np.asarray([record.static_real.get(c, 0.0) for c in layout.static_real], dtype=np.float64),
        targets=targets,
        mask=mask,
        stats=stats,
    )
