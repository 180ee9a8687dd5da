"""
Encoders - History to Hidden States
===================================

This module turns the observed history into one hidden state h_t per
time step, under four interchangeable encoder kinds:

1. lstm - vanilla LSTM with a forget gate
2. lstm_narx - LSTM followed by a shared linear summary of the last D states
3. lstm_lag - LSTM whose inputs carry the lagged target (y_t, ..., y_{t-D})
4. wavenet - stack of width-2 dilated causal convolutions

Every kind returns an EncoderOutput of shape [..., T, H] and h_t reads
only inputs at indices <= t, so a decoder can be attached to every step.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..autodiff import ops
from ..autodiff.init import constant, glorot_uniform
from ..autodiff.tensor import ParameterStore, ParamView, Tensor
from ..errors import ArgumentError, ShapeError
from .specs import EncoderKind, EncoderSpec

# Configure module logger
logger = logging.getLogger(__name__)

GATES = ("input", "forget", "output", "cell")


@dataclass
class EncoderOutput:
    """
    Hidden state for every step of the input window.

    Attributes:
        hidden: Tensor[..., T, H]
    """
    hidden: Tensor

    @property
    def length(self) -> int:
        return self.hidden.shape[-2]

    @property
    def width(self) -> int:
        return self.hidden.shape[-1]


@dataclass
class LSTMParams:
    """
    One LSTM layer: a (F+H)xH matrix and a length-H bias per gate.

    The first F rows of each matrix read the input, the last H rows the
    previous hidden state.
    """
    weights: List[Tensor]
    biases: List[Tensor]
    input_size: int
    hidden_size: int

    def __post_init__(self):
        expected = (self.input_size + self.hidden_size, self.hidden_size)
        for gate, w, b in zip(GATES, self.weights, self.biases):
            if w.shape != expected or b.shape != (self.hidden_size,):
                raise ShapeError(
                    f"LSTM {gate} gate has weight {w.shape} / bias {b.shape}, "
                    f"expected {expected} / ({self.hidden_size},)"
                )

    @classmethod
    def from_view(cls, view: ParamView, prefix: str, input_size: int, hidden_size: int) -> "LSTMParams":
        return cls(
            weights=[view[f"{prefix}.w_{g}"] for g in GATES],
            biases=[view[f"{prefix}.b_{g}"] for g in GATES],
            input_size=input_size,
            hidden_size=hidden_size,
        )


@dataclass
class ConvLayerParams:
    """One dilated causal convolution layer."""
    kernel: Tensor
    bias: Tensor
    dilation: int


def _as_batched(inputs) -> (Tensor, bool):
    inputs = ops.lift(inputs)
    if inputs.ndim == 2:
        return ops.reshape(inputs, (1,) + inputs.shape), True
    if inputs.ndim != 3:
        raise ShapeError(f"Encoder inputs must be [T, F] or [B, T, F], got {inputs.shape}")
    return inputs, False


def _unbatch(hidden: Tensor, squeeze: bool) -> Tensor:
    return ops.reshape(hidden, hidden.shape[1:]) if squeeze else hidden


def lstm_encode(inputs, params: LSTMParams) -> EncoderOutput:
    """
    Run the LSTM recurrence over every step and return all hidden states.

    Starts from zero hidden and cell states:
        i, f, o = sigmoid([x_t, h_{t-1}] W_{i,f,o} + b_{i,f,o})
        g = tanh([x_t, h_{t-1}] W_cell + b_cell)
        c_t = f * c_{t-1} + i * g
        h_t = o * tanh(c_t)

    Args:
        inputs: Tensor[T, F] or Tensor[B, T, F]
        params: Layer parameters

    Returns:
        EncoderOutput with hidden [T, H] (or [B, T, H])

    Raises:
        ShapeError: If F differs from params.input_size
    """
    x, squeeze = _as_batched(inputs)
    batch, steps, features = x.shape
    if steps < 1:
        raise ShapeError("LSTM needs at least one input step")
    if features != params.input_size:
        raise ShapeError(
            f"LSTM expects {params.input_size} input features, got {features}"
        )
    size = params.hidden_size

    weight = ops.concat(params.weights, axis=1)
    bias = ops.concat(params.biases, axis=0)
    w_input = weight[:features]
    w_hidden = weight[features:]
    projected = ops.matmul(x, w_input) + bias

    h = Tensor(np.zeros((batch, size)))
    c = Tensor(np.zeros((batch, size)))
    states = []
    for t in range(steps):
        z = projected[:, t, :] + ops.matmul(h, w_hidden)
        gates = ops.sigmoid(z[:, : 3 * size])
        candidate = ops.tanh(z[:, 3 * size:])
        i = gates[:, :size]
        f = gates[:, size: 2 * size]
        o = gates[:, 2 * size:]
        c = f * c + i * candidate
        h = o * ops.tanh(c)
        states.append(ops.reshape(h, (batch, 1, size)))

    hidden = ops.concat(states, axis=1)
    return EncoderOutput(hidden=_unbatch(hidden, squeeze))


def narx_summarize(hidden, weight, bias, depth: int) -> Tensor:
    """
    Shared linear summary of each state and its D predecessors.

    ``h~_t = [h_t, h_{t-1}, ..., h_{t-D}] W + b`` with zero states before
    the first step; the same map is applied at every t.

    Args:
        hidden: Tensor[..., T, H]
        weight: Tensor[(D+1)*H, H']
        bias: Tensor[H']
        depth: D >= 1

    Returns:
        Tensor[..., T, H']
    """
    hidden = ops.lift(hidden)
    if depth < 1:
        raise ArgumentError(f"NARX depth must be >= 1, got {depth}")
    steps, size = hidden.shape[-2], hidden.shape[-1]
    weight = ops.lift(weight)
    if weight.shape[0] != (depth + 1) * size:
        raise ShapeError(
            f"NARX weight has {weight.shape[0]} rows, expected {(depth + 1) * size}"
        )
    pad = Tensor(np.zeros(hidden.shape[:-2] + (depth, size)))
    padded = ops.concat([pad, hidden], axis=-2)
    window = [padded[..., depth - d: depth - d + steps, :] for d in range(depth + 1)]
    stacked = ops.concat(window, axis=-1)
    return ops.matmul(stacked, weight) + bias


def build_lag_features(y, depth: int) -> np.ndarray:
    """
    Rows (y_t, y_{t-1}, ..., y_{t-D}) with zeros before the series start.

    Args:
        y: Series of length T
        depth: D >= 1

    Returns:
        Array [T, D+1]

    Example:
        >>> build_lag_features([1, 2, 3], 2)
        array([[1., 0., 0.],
               [2., 1., 0.],
               [3., 2., 1.]])
    """
    if depth < 1:
        raise ArgumentError(f"Lag depth must be >= 1, got {depth}")
    y = np.asarray(y, dtype=np.float64)
    steps = y.shape[0]
    lags = np.zeros((steps, depth + 1))
    for d in range(depth + 1):
        if d < steps:
            lags[d:, d] = y[: steps - d]
    return lags


def wavenet_encode(inputs, spec: EncoderSpec, layers: List[ConvLayerParams]) -> EncoderOutput:
    """
    Stack of width-2 dilated causal convolutions with dilations 1, 2, 4, ...

    Each layer computes ``a = tanh(conv(x) + b)`` and adds ``x`` back when
    the channel widths agree. With L layers, out[t] reads x[t-d] for
    d < 2^L only.

    Args:
        inputs: Tensor[T, F] or Tensor[B, T, F]
        spec: Encoder spec (layers L, channel width = hidden)
        layers: Parameters of each layer, in order

    Returns:
        EncoderOutput with hidden [T, hidden] (or batched)
    """
    if len(layers) != spec.layers:
        raise ShapeError(f"WaveNet spec asks for {spec.layers} layers, got {len(layers)}")
    x, squeeze = _as_batched(inputs)
    for layer in layers:
        activated = ops.tanh(ops.dilated_causal_conv1d(x, layer.kernel, layer.dilation) + layer.bias)
        x = activated + x if activated.shape == x.shape else activated
    return EncoderOutput(hidden=_unbatch(x, squeeze))


# ---------------------------------------------------------------------------
# Parameter construction and the encoder facade
# ---------------------------------------------------------------------------

def init_encoder_params(
    store: ParameterStore,
    spec: EncoderSpec,
    input_size: int,
    rng: np.random.Generator
) -> None:
    """Register encoder parameters (Glorot weights, forget bias 1.0)."""
    size = spec.hidden
    if spec.kind == EncoderKind.WAVENET:
        channels_in = input_size
        for layer in range(spec.layers):
            store.add(
                f"encoder.wavenet{layer}.kernel",
                glorot_uniform(rng, 2 * channels_in, size, (2, channels_in, size)),
            )
            store.add(f"encoder.wavenet{layer}.bias", constant((size,)))
            channels_in = size
        return

    layer_input = input_size
    for layer in range(spec.lstm_layers):
        prefix = f"encoder.lstm{layer}"
        for gate in GATES:
            store.add(
                f"{prefix}.w_{gate}",
                glorot_uniform(rng, layer_input + size, size, (layer_input + size, size)),
            )
        for gate in GATES:
            store.add(f"{prefix}.b_{gate}", constant((size,), 1.0 if gate == "forget" else 0.0))
        layer_input = size

    if spec.kind == EncoderKind.LSTM_NARX:
        fan_in = (spec.depth + 1) * size
        store.add("encoder.narx.weight", glorot_uniform(rng, fan_in, size, (fan_in, size)))
        store.add("encoder.narx.bias", constant((size,)))


def wavenet_layers(view: ParamView, spec: EncoderSpec) -> List[ConvLayerParams]:
    return [
        ConvLayerParams(
            kernel=view[f"encoder.wavenet{layer}.kernel"],
            bias=view[f"encoder.wavenet{layer}.bias"],
            dilation=2 ** layer,
        )
        for layer in range(spec.layers)
    ]


def encode(inputs, spec: EncoderSpec, view: ParamView, input_size: Optional[int] = None) -> EncoderOutput:
    """
    Dispatch to the encoder kind named in ``spec``.

    Args:
        inputs: Tensor[B, T, F] (or [T, F])
        spec: Encoder spec
        view: Parameter view (watched on a tape during training)
        input_size: F, defaults to the last input axis

    Returns:
        EncoderOutput with one state per step
    """
    inputs = ops.lift(inputs)
    features = input_size or inputs.shape[-1]

    if spec.kind == EncoderKind.WAVENET:
        return wavenet_encode(inputs, spec, wavenet_layers(view, spec))

    hidden = inputs
    layer_input = features
    for layer in range(spec.lstm_layers):
        params = LSTMParams.from_view(view, f"encoder.lstm{layer}", layer_input, spec.hidden)
        hidden = lstm_encode(hidden, params).hidden
        layer_input = spec.hidden

    if spec.kind == EncoderKind.LSTM_NARX:
        hidden = narx_summarize(
            hidden, view["encoder.narx.weight"], view["encoder.narx.bias"], spec.depth
        )
    return EncoderOutput(hidden=hidden)
