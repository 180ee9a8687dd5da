"""
Autodiff Package - Tensors, Gradients and Optimisation
======================================================

1. tensor.py - Tensor, Tape (computation record), Parameter, backward
2. ops.py - differentiable primitives
3. optim.py - Adam and gradient clipping
4. init.py - weight initialisers
5. checkpoint.py - binary parameter files
"""

from .tensor import (
    Tensor,
    Tape,
    Parameter,
    ParameterStore,
    ParamView,
    backward,
    accumulate_gradients,
)
from .optim import AdamState, adam_step, clip_grad_norm, global_grad_norm
from .checkpoint import save_checkpoint, load_checkpoint, CHECKPOINT_VERSION
from . import ops

__all__ = [
    "Tensor",
    "Tape",
    "Parameter",
    "ParameterStore",
    "ParamView",
    "backward",
    "accumulate_gradients",
    "AdamState",
    "adam_step",
    "clip_grad_norm",
    "global_grad_norm",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_VERSION",
    "ops",
]
