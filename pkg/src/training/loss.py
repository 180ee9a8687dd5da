"""
Loss - Quantile and Log-Gaussian Objectives
===========================================

The training objective is the weighted sum of pinball losses over forecast
creation times t, horizons k and quantiles q, skipping masked terms:

    sum_t sum_k sum_q w_q w_k L_q(y_{t+k}, yhat_{t+k}^(q))
    L_q(y, yhat) = q (y - yhat)_+ + (1 - q) (yhat - y)_+

The log-Gaussian ablation head minimises the negative log-likelihood of
log(y + 1) under N(mu, sigma^2) instead.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..autodiff import ops
from ..autodiff.tensor import Tensor
from ..errors import ArgumentError, DataError, DomainError, ShapeError

# Configure module logger
logger = logging.getLogger(__name__)

HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


def pinball_loss(y, y_hat, q: float):
    """
    Quantile loss L_q(y, yhat); works elementwise on arrays.

    Example:
        >>> pinball_loss(10.0, 4.0, 0.9)
        5.4
    """
    if not 0.0 < q < 1.0:
        raise ArgumentError(f"Quantile level {q} is outside (0, 1)")
    diff = np.asarray(y, dtype=np.float64) - np.asarray(y_hat, dtype=np.float64)
    loss = np.where(diff >= 0.0, q * diff, (q - 1.0) * diff)
    return float(loss) if loss.ndim == 0 else loss


class QuantileSpec(BaseModel):
    """
    Quantile levels and optional loss weights.

    Attributes:
        levels: q_1 < ... < q_Q in (0, 1)
        quantile_weights: One nonnegative weight per level (default 1)
        horizon_weights: One nonnegative weight per horizon (default 1)
    """
    model_config = ConfigDict(extra="forbid")

    levels: List[float] = Field(default_factory=lambda: [0.1, 0.5, 0.9])
    quantile_weights: Optional[List[float]] = None
    horizon_weights: Optional[List[float]] = None

    @field_validator("levels")
    @classmethod
    def _check_levels(cls, levels: List[float]) -> List[float]:
        if not levels:
            raise ValueError("at least one quantile level is required")
        if any(not 0.0 < q < 1.0 for q in levels):
            raise ValueError(f"quantile levels must lie in (0, 1), got {levels}")
        if any(not a < b for a, b in zip(levels, levels[1:])):
            raise ValueError("quantile levels must be strictly increasing")
        return levels

    @model_validator(mode="after")
    def _check_weights(self) -> "QuantileSpec":
        if self.quantile_weights is not None:
            if len(self.quantile_weights) != len(self.levels):
                raise ValueError("quantile_weights needs one weight per level")
            if any(w < 0 for w in self.quantile_weights):
                raise ValueError("quantile weights must be nonnegative")
        if self.horizon_weights is not None and any(w < 0 for w in self.horizon_weights):
            raise ValueError("horizon weights must be nonnegative")
        return self

    def horizon_vector(self, horizon: int) -> np.ndarray:
        """Per-horizon weights w_k as a [K] array."""
        if self.horizon_weights is None:
            return np.ones(horizon)
        if len(self.horizon_weights) != horizon:
            raise ShapeError(f"horizon_weights has {len(self.horizon_weights)} entries for K={horizon}")
        return np.asarray(self.horizon_weights, dtype=np.float64)

    def weight_matrix(self, horizon: int) -> np.ndarray:
        """Weights w_k * w_q as a [K, Q] array."""
        if self.quantile_weights is None:
            w_q = np.ones(len(self.levels))
        else:
            w_q = np.asarray(self.quantile_weights, dtype=np.float64)
        return self.horizon_vector(horizon)[:, None] * w_q[None, :]


def total_quantile_loss(
    predictions,
    targets,
    spec: QuantileSpec,
    mask=None
) -> float:
    """
    Weighted pinball sum over all FCTs, horizons and quantiles.

    Args:
        predictions: [..., K, Q] forecasts (one K x Q grid per FCT)
        targets: [..., K] targets aligned with the grids
        spec: Levels and weights
        mask: [..., K] live terms (default: all)

    Raises:
        DataError: If every term is masked ("no live loss terms")
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape[-1] != len(spec.levels) or predictions.shape[:-1] != targets.shape:
        raise ShapeError(f"Predictions {predictions.shape} do not align with targets {targets.shape}")
    mask = np.ones(targets.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != targets.shape:
        raise ShapeError(f"Mask {mask.shape} does not align with targets {targets.shape}")
    if not mask.any():
        raise DataError("no live loss terms")
    levels = np.asarray(spec.levels)
    safe_targets = np.where(mask, targets, 0.0)[..., None]
    diff = safe_targets - predictions
    terms = np.where(diff >= 0.0, levels * diff, (levels - 1.0) * diff)
    weights = spec.weight_matrix(targets.shape[-1]) * mask[..., None]
    return float((weights * terms).sum())


def quantile_loss_tensor(outputs: Tensor, targets, mask, spec: QuantileSpec) -> Tuple[Tensor, int]:
    """
    Differentiable masked pinball sum.

    Args:
        outputs: Tensor[..., K, Q]
        targets: [..., K]
        mask: [..., K]

    Returns:
        (0-d loss tensor, number of live terms)
    """
    mask = np.asarray(mask, dtype=bool)
    targets = np.where(mask, np.asarray(targets, dtype=np.float64), 0.0)
    weights = spec.weight_matrix(mask.shape[-1]) * mask[..., None]
    loss = ops.pinball_sum(outputs, targets[..., None], np.asarray(spec.levels), weights)
    return loss, int(mask.sum()) * len(spec.levels)


def loggaussian_nll(mu, sigma, targets, mask, horizon_weights: Optional[Sequence[float]] = None) -> Tuple[Tensor, int]:
    """
    Masked negative log-likelihood of log(y + 1) ~ N(mu, sigma^2).

    ``nll = log(sigma) + (log1p(y) - mu)^2 / (2 sigma^2) + log(2 pi) / 2``

    Args:
        mu, sigma: Tensor[..., K]
        targets: [..., K], y > -1 on live terms
        mask: [..., K]

    Returns:
        (0-d loss tensor, number of live terms)

    Raises:
        DomainError: If a live target is <= -1
    """
    mask = np.asarray(mask, dtype=bool)
    targets = np.asarray(targets, dtype=np.float64)
    if np.any(targets[mask] <= -1.0):
        raise DomainError("log-Gaussian head needs targets > -1 (log(y + 1) is undefined)")
    z = np.log1p(np.where(mask, targets, 0.0))
    weights = mask.astype(np.float64)
    if horizon_weights is not None:
        weights = weights * np.asarray(horizon_weights, dtype=np.float64)
    resid = ops.sub(z, mu)
    terms = ops.log(sigma) + resid * resid / (2.0 * sigma * sigma) + HALF_LOG_TWO_PI
    return ops.sum(terms * weights), int(mask.sum())
