"""
Decoder - Global and Local MLPs
===============================

Maps a hidden state h_t and the future-known inputs of the next K steps to
forecasts for every horizon:

- global_mlp: (h_t, x_{t+1..t+K}) -> K horizon-specific contexts + one
  horizon-agnostic context
- local_mlp: (c_{t+k}, c_a, x_{t+k}) -> the outputs for horizon k, with
  the same weights at every k
- simplified decoder: the global MLP emits the K x Q grid directly

Both MLPs have two relu hidden layers. All functions accept any number of
leading axes, so the same code decodes one state or every state of a
batch of series.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..autodiff import ops
from ..autodiff.init import constant, glorot_uniform
from ..autodiff.tensor import ParameterStore, ParamView, Tensor
from ..errors import ContractError, ShapeError
from .grid import ForecastGrid, repair_crossings
from .specs import DecoderKind, HeadKind, ModelSpec

# Configure module logger
logger = logging.getLogger(__name__)


@dataclass
class ContextBundle:
    """
    Output of the global MLP.

    Attributes:
        horizon_contexts: Tensor[..., K, C_h], row k is c_{t+k}
        agnostic_context: Tensor[..., C_a]
    """
    horizon_contexts: Tensor
    agnostic_context: Tensor

    @property
    def horizon(self) -> int:
        return self.horizon_contexts.shape[-2]

    def context(self, k: int) -> Tensor:
        """c_{t+k} for a 1-based horizon k."""
        return self.horizon_contexts[..., k - 1, :]

    def contexts(self) -> List[Tensor]:
        return [self.context(k) for k in range(1, self.horizon + 1)]


@dataclass
class LogGaussianParams:
    """
    Per-horizon parameters of log(y + 1) ~ N(mu, sigma^2).

    Attributes:
        mu: Tensor[..., K]
        sigma: Tensor[..., K], strictly positive
    """
    mu: Tensor
    sigma: Tensor


def _mlp_shapes(spec: ModelSpec, prefix: str):
    width = spec.mlp_hidden
    horizon = spec.horizon
    dec_in = spec.decoder_input_width
    if prefix == "decoder.global":
        fan_in = spec.hidden + horizon * dec_in
        if spec.decoder.kind == DecoderKind.SIMPLIFIED:
            fan_out = horizon * spec.output_width
        else:
            fan_out = horizon * spec.context_horizon + spec.context_agnostic
    else:
        fan_in = spec.context_horizon + spec.context_agnostic + dec_in
        fan_out = spec.output_width
    return [(fan_in, width), (width, width), (width, fan_out)]


def init_decoder_params(store: ParameterStore, spec: ModelSpec, rng: np.random.Generator) -> None:
    """Register global (and, for the full decoder, local) MLP parameters."""
    prefixes = ["decoder.global"]
    if spec.decoder.kind == DecoderKind.FULL:
        prefixes.append("decoder.local")
    for prefix in prefixes:
        for layer, (fan_in, fan_out) in enumerate(_mlp_shapes(spec, prefix), start=1):
            store.add(f"{prefix}.w{layer}", glorot_uniform(rng, fan_in, fan_out, (fan_in, fan_out)))
            store.add(f"{prefix}.b{layer}", constant((fan_out,)))


def mlp(x, view: ParamView, prefix: str) -> Tensor:
    """Two relu hidden layers followed by a linear output layer."""
    x = ops.lift(x)
    single = x.ndim == 1
    if single:
        x = ops.reshape(x, (1, x.shape[0]))
    hidden = ops.relu(ops.matmul(x, view[f"{prefix}.w1"]) + view[f"{prefix}.b1"])
    hidden = ops.relu(ops.matmul(hidden, view[f"{prefix}.w2"]) + view[f"{prefix}.b2"])
    out = ops.matmul(hidden, view[f"{prefix}.w3"]) + view[f"{prefix}.b3"]
    return ops.reshape(out, out.shape[1:]) if single else out


def _flatten_future(future, spec: ModelSpec) -> Tensor:
    future = ops.lift(future)
    horizon, width = spec.horizon, spec.decoder_input_width
    if future.ndim >= 2 and future.shape[-2:] == (horizon, width):
        return ops.reshape(future, future.shape[:-2] + (horizon * width,))
    raise ShapeError(
        f"Future inputs must end in ({horizon}, {width}) for K={horizon} horizons "
        f"of {width} features, got {future.shape}"
    )


def _global_input(h, future, spec: ModelSpec) -> Tensor:
    h = ops.lift(h)
    flat = _flatten_future(future, spec)
    if h.shape[:-1] != flat.shape[:-1]:
        raise ShapeError(f"Hidden state {h.shape} and future inputs {flat.shape} disagree")
    return ops.concat([h, flat], axis=-1)


def global_mlp(h, future, spec: ModelSpec, view: ParamView) -> ContextBundle:
    """
    Compute (c_{t+1}, ..., c_{t+K}, c_a) = m_G(h_t, x_{t+1..t+K}).

    Args:
        h: Tensor[..., H]
        future: Tensor[..., K, F_dec], horizons in order
        spec: Model spec (full decoder)
        view: Parameter view

    Returns:
        ContextBundle

    Raises:
        ShapeError: If the future inputs do not cover exactly K horizons
    """
    if spec.decoder.kind != DecoderKind.FULL:
        raise ContractError("global_mlp contexts exist only for the full decoder")
    out = mlp(_global_input(h, future, spec), view, "decoder.global")
    horizon, width = spec.horizon, spec.context_horizon
    split = horizon * width
    contexts = ops.reshape(out[..., :split], out.shape[:-1] + (horizon, width))
    return ContextBundle(horizon_contexts=contexts, agnostic_context=out[..., split:])


def local_mlp(c_k, c_a, x_k, view: ParamView) -> Tensor:
    """
    Outputs for one horizon: m_L(c_{t+k}, c_a, x_{t+k}).

    The weights are the same for every k; leading axes broadcast so a
    whole [..., K, C_h] block can be decoded in one call.
    """
    c_k = ops.lift(c_k)
    c_a = ops.lift(c_a)
    x_k = ops.lift(x_k)
    lead = c_k.shape[:-1]
    if c_a.shape[:-1] != lead:
        c_a = ops.broadcast_to(c_a, lead + (c_a.shape[-1],))
    return mlp(ops.concat([c_k, c_a, x_k], axis=-1), view, "decoder.local")


def decode_outputs(h, future, spec: ModelSpec, view: ParamView) -> Tensor:
    """
    Raw decoder outputs for every horizon.

    Args:
        h: Tensor[..., H]
        future: Tensor[..., K, F_dec]

    Returns:
        Tensor[..., K, W] with W = Q (quantile head) or 2 (log-Gaussian)
    """
    if spec.decoder.kind == DecoderKind.SIMPLIFIED:
        out = mlp(_global_input(h, future, spec), view, "decoder.global")
        return ops.reshape(out, out.shape[:-1] + (spec.horizon, spec.output_width))

    bundle = global_mlp(h, future, spec, view)
    agnostic = ops.lift(bundle.agnostic_context)
    lead = agnostic.shape[:-1]
    agnostic = ops.reshape(agnostic, lead + (1, agnostic.shape[-1]))
    agnostic = ops.broadcast_to(agnostic, lead + (spec.horizon, agnostic.shape[-1]))
    return local_mlp(bundle.horizon_contexts, agnostic, future, view)


def loggaussian_from_raw(raw: Tensor) -> LogGaussianParams:
    """Split a [..., K, 2] output into mu and softplus-mapped sigma."""
    return LogGaussianParams(mu=raw[..., 0], sigma=ops.softplus(raw[..., 1]))


def loggaussian_decode(h, future, spec: ModelSpec, view: ParamView) -> LogGaussianParams:
    """
    Per-horizon (mu_k, sigma_k) of log(y + 1) from the same MLP trunk.

    sigma_k = softplus(s_k) > 0 for any raw output s_k.
    """
    if spec.head != HeadKind.LOGGAUSSIAN:
        raise ContractError("loggaussian_decode needs a model with the loggaussian head")
    return loggaussian_from_raw(decode_outputs(h, future, spec, view))


def decode_grid(
    h,
    future,
    spec: ModelSpec,
    view: ParamView,
    creation_time: int = 0,
    series_id: Optional[str] = None
) -> ForecastGrid:
    """
    Assemble the K x Q forecast grid for a single hidden state.

    Args:
        h: Tensor[H]
        future: Tensor[K, F_dec]
        spec: Model spec with the quantile head
        view: Parameter view
        creation_time: FCT t stored on the grid
        series_id: Optional series identifier

    Returns:
        ForecastGrid (rows sorted when spec.repair_crossings is set)
    """
    if spec.head != HeadKind.QUANTILE:
        raise ContractError("decode_grid needs a model with the quantile head")
    h = ops.lift(h)
    if h.ndim != 1:
        raise ShapeError(f"decode_grid decodes one state, got shape {h.shape}")
    values = decode_outputs(h, future, spec, view).numpy()
    grid = ForecastGrid(
        values=values,
        quantiles=list(spec.quantiles),
        creation_time=creation_time,
        series_id=series_id,
    )
    return repair_crossings(grid) if spec.repair_crossings else grid
