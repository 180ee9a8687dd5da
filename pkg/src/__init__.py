"""
MQ Forecast - Source Package
============================

Multi-horizon quantile forecasting with sequence encoders and forked
MLP decoders:
- autodiff: reverse-mode differentiation on numpy arrays, Adam, checkpoints
- models: encoders, decoder, forecast grids and the MQForecaster
- training: quantile/likelihood losses, forking sequences, trainer
- data: schema, ingestion, calendar features, normalisation, synthetic data
- evaluation: quantile loss, calibration, sharpness, rolling evaluation
- reporting: forecast band figures
"""

__version__ = "1.0.0"

from .errors import ExitCode, ForecastError
from .models.specs import DecoderSpec, EncoderSpec, ModelSpec
from .models.grid import ForecastGrid
from .models.forecaster import MQForecaster
from .training.trainer import ForecastTrainer, TrainingConfig, train

__all__ = [
    "ExitCode",
    "ForecastError",
    "DecoderSpec",
    "EncoderSpec",
    "ModelSpec",
    "ForecastGrid",
    "MQForecaster",
    "ForecastTrainer",
    "TrainingConfig",
    "train",
]
