"""
Optim - Adam Optimizer
======================

Adam with bias correction, keyed by parameter name. Gradients are read,
never modified: zeroing them between steps is the caller's job, which is
what lets many decoder losses accumulate into one update.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np

from ..errors import ShapeError
from .tensor import Parameter

# Configure module logger
logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """
    Optimizer state.

    Attributes:
        lr: Learning rate
        beta1: Decay of the first-moment estimate
        beta2: Decay of the second-moment estimate
        eps: Denominator stabiliser
        step: Number of updates applied so far
        m: First-moment tensors keyed by parameter name
        v: Second-moment tensors keyed by parameter name
    """
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Iterable[Parameter], state: AdamState) -> AdamState:
    """
    Apply one Adam update to every parameter in place.

    Args:
        params: Parameters with populated gradients
        state: Optimizer state, updated in place

    Returns:
        The same state object, with ``step`` incremented

    Raises:
        ShapeError: If stored moments no longer match a parameter's shape
    """
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    step_size = state.lr / bc1

    for param in params:
        g = param.grad
        m = state.m.get(param.name)
        if m is None:
            m = state.m[param.name] = np.zeros_like(param.value)
            state.v[param.name] = np.zeros_like(param.value)
        v = state.v[param.name]
        if m.shape != param.shape:
            raise ShapeError(
                f"Adam moments for '{param.name}' have shape {m.shape}, "
                f"parameter has {param.shape}"
            )

        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)

        denom = np.sqrt(v * (1.0 / bc2)) + state.eps
        param.value -= step_size * m / denom

    return state


def global_grad_norm(params: Iterable[Parameter]) -> float:
    """L2 norm of all gradients taken together."""
    total = 0.0
    for param in params:
        total += float(np.sum(param.grad * param.grad))
    return float(np.sqrt(total))


def clip_grad_norm(params: Iterable[Parameter], max_norm: Optional[float]) -> float:
    """
    Rescale gradients so their global norm is at most ``max_norm``.

    Returns:
        The norm before clipping
    """
    params = list(params)
    norm = global_grad_norm(params)
    if max_norm is not None and norm > max_norm > 0.0:
        scale = max_norm / norm
        for param in params:
            param.grad *= scale
        logger.debug(f"Clipped gradient norm {norm:.4g} to {max_norm:.4g}")
    return norm
