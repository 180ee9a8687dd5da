"""
Models Package - Encoders, Decoders and Forecast Grids
======================================================

1. specs.py - pydantic architecture descriptions
2. encoders.py - lstm, lstm_narx, lstm_lag and wavenet encoders
3. decoder.py - global/local MLP decoder and the log-Gaussian head
4. grid.py - ForecastGrid and its CSV format
5. forecaster.py - MQForecaster (import from src.models.forecaster)
"""

from .specs import (
    DecoderKind,
    DecoderSpec,
    EncoderKind,
    EncoderSpec,
    FeatureLayout,
    HeadKind,
    ModelSpec,
    NormalizationMode,
)
from .encoders import (
    EncoderOutput,
    LSTMParams,
    build_lag_features,
    encode,
    lstm_encode,
    narx_summarize,
    wavenet_encode,
)
from .decoder import (
    ContextBundle,
    LogGaussianParams,
    decode_grid,
    decode_outputs,
    global_mlp,
    local_mlp,
    loggaussian_decode,
)
from .grid import ForecastGrid, quantiles_from_loggaussian, read_grids, repair_crossings, write_grids

__all__ = [
    "DecoderKind",
    "DecoderSpec",
    "EncoderKind",
    "EncoderSpec",
    "FeatureLayout",
    "HeadKind",
    "ModelSpec",
    "NormalizationMode",
    "EncoderOutput",
    "LSTMParams",
    "build_lag_features",
    "encode",
    "lstm_encode",
    "narx_summarize",
    "wavenet_encode",
    "ContextBundle",
    "LogGaussianParams",
    "decode_grid",
    "decode_outputs",
    "global_mlp",
    "local_mlp",
    "loggaussian_decode",
    "ForecastGrid",
    "quantiles_from_loggaussian",
    "read_grids",
    "repair_crossings",
    "write_grids",
]
