"""
Ops - Differentiable Primitives
===============================

Every function here takes Tensors (or anything numpy can turn into an
array), computes its result with numpy and, when an input is attached to
a Tape, records the backward rule next to the result.

Broadcasting follows numpy; gradients of broadcast operands are summed
back to the operand's shape.
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from ..errors import ContractError, DomainError, ShapeError, ArgumentError
from .tensor import Tape, Tensor, as_array

# Configure module logger
logger = logging.getLogger(__name__)

ELEMENTWISE_KINDS = ("sigmoid", "tanh", "relu", "softplus", "exp", "log1p", "log")


def lift(value) -> Tensor:
    """Wrap a non-Tensor value as a constant Tensor."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _tape_of(tensors: Sequence[Tensor]) -> Optional[Tape]:
    tape = None
    for tensor in tensors:
        if tensor.tape is None:
            continue
        if tape is None:
            tape = tensor.tape
        elif tensor.tape is not tape:
            raise ContractError("Operands were recorded on different tapes")
    return tape


def _emit(op: str, inputs: Sequence[Tensor], data: np.ndarray, backward) -> Tensor:
    tape = _tape_of(inputs)
    if tape is None:
        return Tensor(data)
    return tape.record(op, inputs, data, backward)


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == tuple(shape):
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, dim in enumerate(shape) if dim == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    data = a.data + b.data

    def _backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return _emit("add", (a, b), data, _backward)


def sub(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    data = a.data - b.data

    def _backward(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return _emit("sub", (a, b), data, _backward)


def mul(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    data = a.data * b.data

    def _backward(g):
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)

    return _emit("mul", (a, b), data, _backward)


def div(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    if np.any(b.data == 0.0):
        raise DomainError("Division by zero")
    data = a.data / b.data

    def _backward(g):
        ga = g / b.data
        gb = -g * a.data / (b.data * b.data)
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)

    return _emit("div", (a, b), data, _backward)


def neg(a) -> Tensor:
    a = lift(a)

    def _backward(g):
        return (-g,)

    return _emit("neg", (a,), -a.data, _backward)


def matmul(a, b) -> Tensor:
    """
    Matrix product over the last two axes (leading axes broadcast).

    Args:
        a: Tensor[..., m, k]
        b: Tensor[..., k, n]

    Returns:
        Tensor[..., m, n]

    Raises:
        ShapeError: If an operand has fewer than two axes or the inner
            dimensions differ
    """
    a, b = lift(a), lift(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs 2-d operands, got shapes {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(
            f"matmul inner dimensions differ: {a.shape} x {b.shape}"
        )
    data = np.matmul(a.data, b.data)

    def _backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)

    return _emit("matmul", (a, b), data, _backward)


# ---------------------------------------------------------------------------
# Elementwise nonlinearities
# ---------------------------------------------------------------------------

def elementwise(kind: str, x) -> Tensor:
    """
    Apply a named nonlinearity per element.

    Args:
        kind: One of sigmoid, tanh, relu, softplus, exp, log1p, log
        x: Input tensor

    Returns:
        Tensor of the same shape

    Raises:
        DomainError: log1p on x <= -1, log on x <= 0
        ContractError: Unknown kind
    """
    x = lift(x)
    v = x.data
    if kind == "sigmoid":
        out = expit(v)
        local = out * (1.0 - out)
    elif kind == "tanh":
        out = np.tanh(v)
        local = 1.0 - out * out
    elif kind == "relu":
        out = np.maximum(v, 0.0)
        local = (v > 0.0).astype(np.float64)
    elif kind == "softplus":
        out = np.logaddexp(0.0, v)
        local = expit(v)
    elif kind == "exp":
        out = np.exp(v)
        local = out
    elif kind == "log1p":
        if np.any(v <= -1.0):
            raise DomainError("log1p is undefined for x <= -1")
        out = np.log1p(v)
        local = 1.0 / (1.0 + v)
    elif kind == "log":
        if np.any(v <= 0.0):
            raise DomainError("log is undefined for x <= 0")
        out = np.log(v)
        local = 1.0 / v
    else:
        raise ContractError(f"Unknown elementwise kind '{kind}', expected one of {ELEMENTWISE_KINDS}")

    def _backward(g):
        return (g * local,)

    return _emit(kind, (x,), out, _backward)


def sigmoid(x) -> Tensor:
    return elementwise("sigmoid", x)


def tanh(x) -> Tensor:
    return elementwise("tanh", x)


def relu(x) -> Tensor:
    return elementwise("relu", x)


def softplus(x) -> Tensor:
    return elementwise("softplus", x)


def exp(x) -> Tensor:
    return elementwise("exp", x)


def log1p(x) -> Tensor:
    return elementwise("log1p", x)


def log(x) -> Tensor:
    return elementwise("log", x)


# ---------------------------------------------------------------------------
# Structural
# ---------------------------------------------------------------------------

def sum(x) -> Tensor:  # noqa: A001 - mirrors numpy naming
    """Sum of all elements as a 0-d tensor."""
    x = lift(x)
    data = np.asarray(x.data.sum())

    def _backward(g):
        return (np.full(x.shape, float(g)),)

    return _emit("sum", (x,), data, _backward)


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = lift(x)
    data = x.data.reshape(shape)

    def _backward(g):
        return (g.reshape(x.shape),)

    return _emit("reshape", (x,), data, _backward)


def broadcast_to(x, shape: Sequence[int]) -> Tensor:
    x = lift(x)
    data = np.array(np.broadcast_to(x.data, tuple(shape)))

    def _backward(g):
        return (unbroadcast(g, x.shape),)

    return _emit("broadcast_to", (x,), data, _backward)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    """Concatenate tensors along ``axis``."""
    tensors = [lift(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError(
            f"concat shapes disagree: {[t.shape for t in tensors]} on axis {axis}"
        ) from exc
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def _backward(g):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis)
            for i in range(len(tensors))
        )

    return _emit("concat", tensors, data, _backward)


def _is_advanced(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return any(isinstance(p, (list, np.ndarray)) for p in parts)


def getitem(x, index) -> Tensor:
    """Index or slice a tensor (basic and integer-array indexing)."""
    x = lift(x)
    data = np.array(x.data[index])
    advanced = _is_advanced(index)

    def _backward(g):
        grad = np.zeros(x.shape)
        if advanced:
            np.add.at(grad, index, g)
        else:
            grad[index] += g
        return (grad,)

    return _emit("getitem", (x,), data, _backward)


# ---------------------------------------------------------------------------
# Sequence and loss primitives
# ---------------------------------------------------------------------------

def _shift_past(values: np.ndarray, dilation: int) -> np.ndarray:
    """values[..., t, :] -> values[..., t - dilation, :] with zero left padding."""
    shifted = np.zeros_like(values)
    steps = values.shape[-2]
    if dilation < steps:
        shifted[..., dilation:, :] = values[..., : steps - dilation, :]
    return shifted


def _shift_future(values: np.ndarray, dilation: int) -> np.ndarray:
    """Adjoint of _shift_past."""
    shifted = np.zeros_like(values)
    steps = values.shape[-2]
    if dilation < steps:
        shifted[..., : steps - dilation, :] = values[..., dilation:, :]
    return shifted


def dilated_causal_conv1d(x, kernel, dilation: int) -> Tensor:
    """
    Width-2 dilated causal convolution with stride 1.

    ``out[t] = x[t] @ kernel[0] + x[t - dilation] @ kernel[1]``, where
    positions before the start read zeros. The output has as many steps
    as the input and ``out[t]`` never reads an index greater than t.

    Args:
        x: Tensor[..., T, C_in]
        kernel: Tensor[2, C_in, C_out]; tap 0 reads the current step,
            tap 1 the step ``dilation`` in the past
        dilation: Positive step distance between the two taps

    Returns:
        Tensor[..., T, C_out]

    Raises:
        ArgumentError: If dilation < 1
        ShapeError: If kernel and input channels disagree
    """
    x, kernel = lift(x), lift(kernel)
    if int(dilation) != dilation or dilation < 1:
        raise ArgumentError(f"Dilation must be a positive integer, got {dilation}")
    dilation = int(dilation)
    if x.ndim < 2:
        raise ShapeError(f"Convolution input needs a time and channel axis, got {x.shape}")
    if kernel.ndim != 3 or kernel.shape[0] != 2 or kernel.shape[1] != x.shape[-1]:
        raise ShapeError(
            f"Kernel shape {kernel.shape} does not fit input channels {x.shape[-1]}"
        )
    past = _shift_past(x.data, dilation)
    data = np.matmul(x.data, kernel.data[0]) + np.matmul(past, kernel.data[1])

    def _backward(g):
        gx = np.matmul(g, kernel.data[0].T) + _shift_future(np.matmul(g, kernel.data[1].T), dilation)
        flat_g = g.reshape(-1, g.shape[-1])
        gk = np.stack([
            x.data.reshape(-1, x.shape[-1]).T @ flat_g,
            past.reshape(-1, x.shape[-1]).T @ flat_g,
        ])
        return gx, gk

    return _emit("dilated_causal_conv1d", (x, kernel), data, _backward)


def pinball_sum(pred, target, levels, weights) -> Tensor:
    """
    Weighted sum of quantile (pinball) losses.

    ``L_q(y, p) = q (y - p)_+ + (1 - q)(p - y)_+`` summed over all terms
    with per-term weights. The derivative in ``p`` is ``1 - q`` where
    p > y and ``-q`` where p <= y (the kink takes the left branch).

    Args:
        pred: Tensor[..., Q] forecasts
        target: array broadcastable to pred (typically [..., 1])
        levels: array [Q] of quantile levels
        weights: array broadcastable to pred; zero removes a term

    Returns:
        0-d Tensor with the weighted sum
    """
    pred = lift(pred)
    y = as_array(target)
    q = as_array(levels)
    w = np.broadcast_to(as_array(weights), pred.shape)
    diff = y - pred.data
    terms = np.where(diff >= 0.0, q * diff, (q - 1.0) * diff)
    data = np.asarray((w * terms).sum())

    def _backward(g):
        local = np.where(pred.data > y, 1.0 - q, -q)
        return (float(g) * w * local,)

    return _emit("pinball_sum", (pred,), data, _backward)
