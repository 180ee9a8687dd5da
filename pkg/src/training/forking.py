"""
Forking - Forking and Cutting Sequences
=======================================

Forking-sequences attaches the shared decoder to every encoder step, so one
forward pass over a series yields a forecast grid at every forecast
creation time (FCT) and one backward pass gathers the gradients of all of
them. Cutting-sequences runs the encoder on a prefix ending at a single
FCT and decodes once.

For fixed parameters the forking loss of a series equals the sum of the
cutting losses over every FCT, because the encoder is causal and both
schemes use the same target mask.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..autodiff.tensor import ParamView, Tensor
from ..data.assembly import BatchInputs, ModelInputs, stack_inputs
from ..errors import ArgumentError, ShapeError
from ..models.decoder import loggaussian_from_raw
from ..models.forecaster import MQForecaster
from ..models.grid import ForecastGrid
from ..models.specs import HeadKind, ModelSpec
from .loss import QuantileSpec, loggaussian_nll, quantile_loss_tensor

# Configure module logger
logger = logging.getLogger(__name__)

InputsLike = Union[ModelInputs, Sequence[ModelInputs]]


@dataclass
class ForkedOutput:
    """
    Decoder outputs at every FCT of a batch.

    Attributes:
        outputs: Tensor[B, T, K, W]
        batch: Inputs the outputs were computed from
    """
    outputs: Tensor
    batch: BatchInputs

    def grids(self, quantiles: Sequence[float], index: int = 0) -> List[ForecastGrid]:
        """Raw (normalised) grids for series ``index``, one per FCT."""
        values = self.outputs.data[index]
        return [
            ForecastGrid(
                values=values[t],
                quantiles=list(quantiles),
                creation_time=int(self.batch.times[index, t]),
                series_id=self.batch.series_ids[index],
            )
            for t in range(values.shape[0])
        ]


def _as_batch(inputs: InputsLike) -> BatchInputs:
    items = [inputs] if isinstance(inputs, ModelInputs) else list(inputs)
    return stack_inputs(items)


def forked_forward(model: MQForecaster, inputs: InputsLike, view: ParamView = None) -> ForkedOutput:
    """
    Decode at every encoder step in one computation record.

    Args:
        model: Forecaster
        inputs: One series or several of equal length
        view: Parameter view; watch it on a tape to train

    Returns:
        ForkedOutput with T grids per series
    """
    batch = _as_batch(inputs)
    if model.spec.horizon >= batch.length:
        logger.warning(
            f"Horizon K={model.spec.horizon} >= series length {batch.length}: "
            f"only the first horizons carry live targets"
        )
    view = view if view is not None else model.view()
    return ForkedOutput(outputs=model.forward(batch, view), batch=batch)


def cut_forward(model: MQForecaster, inputs: InputsLike, fct: int, view: ParamView = None) -> Tuple[Tensor, BatchInputs]:
    """
    Encode the prefix ending at FCT ``fct`` (1-based) and decode once.

    Returns:
        (Tensor[B, 1, K, W], batch of the prefix inputs)

    Raises:
        ArgumentError: If fct is outside 1..T
    """
    items = [inputs] if isinstance(inputs, ModelInputs) else list(inputs)
    length = items[0].length
    if any(item.length != length for item in items):
        raise ShapeError("Cut series must share one length")
    if not 1 <= fct <= length:
        raise ArgumentError(f"FCT {fct} is outside 1..{length}")
    batch = stack_inputs([item.prefix(fct) for item in items])
    view = view if view is not None else model.view()
    return model.forward(batch, view, last_only=True), batch


def output_loss(spec: ModelSpec, outputs: Tensor, targets, mask, quantiles: QuantileSpec) -> Tuple[Tensor, int]:
    """Masked loss of decoder outputs under the model's head."""
    if spec.head == HeadKind.QUANTILE:
        return quantile_loss_tensor(outputs, targets, mask, quantiles)
    params = loggaussian_from_raw(outputs)
    return loggaussian_nll(
        params.mu, params.sigma, targets, mask, quantiles.horizon_vector(spec.horizon)
    )


def forking_loss(
    model: MQForecaster,
    inputs: InputsLike,
    quantiles: QuantileSpec,
    view: ParamView = None
) -> Tuple[Tensor, int]:
    """Summed loss over every FCT, horizon and quantile, with its live-term count."""
    forked = forked_forward(model, inputs, view)
    return output_loss(model.spec, forked.outputs, forked.batch.targets, forked.batch.mask, quantiles)


def cutting_loss(
    model: MQForecaster,
    inputs: InputsLike,
    fct: int,
    quantiles: QuantileSpec,
    view: ParamView = None
) -> Tuple[Tensor, int]:
    """Loss of the single grid at FCT ``fct`` with the same mask row as forking."""
    outputs, batch = cut_forward(model, inputs, fct, view)
    row = slice(fct - 1, fct)
    return output_loss(model.spec, outputs, batch.targets[:, row], batch.mask[:, row], quantiles)
