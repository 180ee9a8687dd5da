"""
Training Package - Losses, Forking Sequences and the Trainer
============================================================

1. loss.py - pinball and log-Gaussian objectives
2. forking.py - forking-sequences and cutting-sequences forward passes
3. trainer.py - minibatch Adam training loop
"""

from ..data.assembly import TargetMask
from .loss import QuantileSpec, loggaussian_nll, pinball_loss, quantile_loss_tensor, total_quantile_loss
from .forking import (
    ForkedOutput,
    cut_forward,
    cutting_loss,
    forked_forward,
    forking_loss,
)
from .trainer import ForecastTrainer, TrainingConfig, TrainingResult, TrainingScheme, train, training_inputs

__all__ = [
    "QuantileSpec",
    "loggaussian_nll",
    "pinball_loss",
    "quantile_loss_tensor",
    "total_quantile_loss",
    "ForkedOutput",
    "TargetMask",
    "cut_forward",
    "cutting_loss",
    "forked_forward",
    "forking_loss",
    "ForecastTrainer",
    "TrainingConfig",
    "TrainingResult",
    "TrainingScheme",
    "train",
    "training_inputs",
]
