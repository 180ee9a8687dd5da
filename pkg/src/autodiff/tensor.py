"""
Tensor - Dense Tensors with Reverse-Mode Recording
==================================================

This module provides the numeric value type of the engine and the
define-by-run recorder used for gradients:

- Tensor: dense float64 array, optionally attached to a Tape
- Tape: the ordered computation record of one forward pass
- Parameter / ParameterStore: named trainable values and their gradients
- backward: one reverse sweep over a Tape, accumulating into Parameters

A Tape is rebuilt for every training step. Tensors that are not attached
to a Tape are constants and never receive gradients.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ContractError, ShapeError

# Configure module logger
logger = logging.getLogger(__name__)

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def as_array(data) -> np.ndarray:
    """Convert ``data`` to a contiguous float64 array."""
    return np.ascontiguousarray(data, dtype=np.float64)


@dataclass
class Parameter:
    """
    A named trainable tensor.

    Attributes:
        name: Unique, stable name within a model
        value: Current value
        grad: Accumulated gradient, same shape as value
    """
    name: str
    value: np.ndarray
    grad: Optional[np.ndarray] = None

    def __post_init__(self):
        self.value = as_array(self.value).copy()
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        else:
            self.grad = as_array(self.grad).copy()
        if self.grad.shape != self.value.shape:
            raise ShapeError(
                f"Gradient shape {self.grad.shape} does not match value "
                f"shape {self.value.shape} for parameter '{self.name}'"
            )

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def zero_grad(self) -> None:
        """Reset the accumulated gradient to zero."""
        self.grad.fill(0.0)


class ParameterStore:
    """
    Ordered collection of Parameters keyed by name.

    Iteration order is insertion order, which fixes the order of optimizer
    updates, checkpoint payloads and gradient merges.
    """

    def __init__(self):
        self._params: "OrderedDict[str, Parameter]" = OrderedDict()

    def add(self, name: str, value) -> Parameter:
        """Register a new parameter; names must be unique."""
        if name in self._params:
            raise ContractError(f"Duplicate parameter name: {name}")
        param = Parameter(name=name, value=value)
        self._params[name] = param
        return param

    def __getitem__(self, name: str) -> Parameter:
        try:
            return self._params[name]
        except KeyError:
            raise ContractError(f"Unknown parameter: {name}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params.keys())

    def zero_grad(self) -> None:
        for param in self._params.values():
            param.zero_grad()

    def values(self) -> Dict[str, np.ndarray]:
        """Return copies of every parameter value keyed by name."""
        return {name: p.value.copy() for name, p in self._params.items()}

    def load_values(self, values: Dict[str, np.ndarray]) -> None:
        """Overwrite parameter values; names and shapes must match exactly."""
        missing = sorted(set(self._params) - set(values))
        extra = sorted(set(values) - set(self._params))
        if missing or extra:
            raise ContractError(
                f"Parameter names differ: missing={missing}, unexpected={extra}"
            )
        for name, param in self._params.items():
            value = as_array(values[name])
            if value.shape != param.shape:
                raise ShapeError(
                    f"Parameter '{name}' has shape {param.shape}, got {value.shape}"
                )
            param.value[...] = value

    def norms(self) -> Dict[str, float]:
        """L2 norm of every parameter value (used in diagnostics)."""
        return {name: float(np.linalg.norm(p.value)) for name, p in self._params.items()}

    def __repr__(self) -> str:
        return f"ParameterStore(n_params={len(self._params)})"


@dataclass
class Record:
    """
    One primitive application in a computation record.

    Attributes:
        op: Primitive name
        inputs: Node ids of the inputs (None for constants)
        output: Node id of the result
        backward: Maps the output gradient to one gradient per input
    """
    op: str
    inputs: Tuple[Optional[int], ...]
    output: int
    backward: BackwardFn


class Tape:
    """
    Ordered record of primitive applications for one forward pass.

    Node ids are assigned in creation order, so every input id precedes
    the id of its consumer.

    Example:
        >>> tape = Tape()
        >>> w = tape.watch(store["decoder.local.w1"])
        >>> loss = ops.sum(x @ w)
        >>> backward(tape, loss)
    """

    def __init__(self):
        self.records: List[Record] = []
        self._next_node = 0
        self._leaves: "OrderedDict[int, Parameter]" = OrderedDict()
        self._watched: Dict[str, "Tensor"] = {}

    def _new_node(self) -> int:
        node = self._next_node
        self._next_node += 1
        return node

    def watch(self, param: Parameter) -> "Tensor":
        """Return the leaf tensor for ``param`` on this tape (one per name)."""
        tensor = self._watched.get(param.name)
        if tensor is None:
            node = self._new_node()
            tensor = Tensor(param.value, tape=self, node=node)
            self._leaves[node] = param
            self._watched[param.name] = tensor
        return tensor

    def record(
        self,
        op: str,
        inputs: Sequence["Tensor"],
        data: np.ndarray,
        backward: BackwardFn
    ) -> "Tensor":
        """Append a primitive application and return its output tensor."""
        node = self._new_node()
        self.records.append(
            Record(
                op=op,
                inputs=tuple(t.node if t.tape is self else None for t in inputs),
                output=node,
                backward=backward,
            )
        )
        return Tensor(data, tape=self, node=node)

    @property
    def leaves(self) -> "OrderedDict[int, Parameter]":
        return self._leaves

    def __len__(self) -> int:
        return len(self.records)

    def __repr__(self) -> str:
        return f"Tape(records={len(self.records)}, leaves={len(self._leaves)})"


class Tensor:
    """
    Dense n-dimensional float64 value.

    Attributes:
        data: Row-major numpy array
        tape: Tape the tensor was recorded on, or None for constants
        node: Node id on the tape, or None for constants
    """

    __slots__ = ("data", "tape", "node")
    __array_priority__ = 100

    def __init__(self, data, tape: Optional[Tape] = None, node: Optional[int] = None):
        self.data = as_array(data)
        self.tape = tape
        self.node = node

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def tracked(self) -> bool:
        return self.tape is not None

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, shape is {self.shape}")
        return float(self.data.reshape(-1)[0])

    # Operators delegate to the primitives module.
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        from . import ops
        return ops.matmul(other, self)

    def __getitem__(self, index):
        from . import ops
        return ops.getitem(self, index)

    def __repr__(self) -> str:
        state = f"node={self.node}" if self.tracked else "constant"
        return f"Tensor(shape={self.shape}, {state})"


def backward(
    tape: Tape,
    loss: Tensor,
    accumulate: bool = True
) -> Dict[str, np.ndarray]:
    """
    Run one reverse sweep from a scalar loss.

    Args:
        tape: The computation record the loss was built on
        loss: Scalar tensor (exactly one element)
        accumulate: If True, add gradients into each Parameter.grad

    Returns:
        Gradient of the loss for every watched parameter, keyed by name.
        Parameters the loss does not depend on get exact zeros.

    Raises:
        ContractError: If the loss is not a scalar or belongs to another tape
    """
    if loss.size != 1:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if loss.tape is not None and loss.tape is not tape:
        raise ContractError("Loss tensor was recorded on a different tape")

    grads: Dict[int, np.ndarray] = {}
    if loss.tape is tape:
        grads[loss.node] = np.ones_like(loss.data)

    for record in reversed(tape.records):
        out_grad = grads.pop(record.output, None)
        if out_grad is None:
            continue
        in_grads = record.backward(out_grad)
        for node, grad in zip(record.inputs, in_grads):
            if node is None or grad is None:
                continue
            if node in grads:
                grads[node] = grads[node] + grad
            else:
                grads[node] = grad

    result: Dict[str, np.ndarray] = {}
    for node, param in tape.leaves.items():
        grad = grads.get(node)
        grad = np.zeros_like(param.value) if grad is None else as_array(grad)
        result[param.name] = grad
        if accumulate:
            param.grad += grad

    logger.debug(f"Backward over {len(tape.records)} records, {len(result)} parameters")
    return result


def accumulate_gradients(params: Iterable[Parameter], grads: Dict[str, np.ndarray]) -> None:
    """Add a gradient mapping into the matching parameters, in parameter order."""
    for param in params:
        grad = grads.get(param.name)
        if grad is not None:
            param.grad += grad


class ParamView:
    """
    Read parameters as Tensors.

    With a tape, each parameter is watched (so gradients flow back to it);
    without one, parameters come back as constants for inference.
    """

    def __init__(self, store: ParameterStore, tape: Optional[Tape] = None):
        self.store = store
        self.tape = tape

    def __getitem__(self, name: str) -> Tensor:
        param = self.store[name]
        if self.tape is None:
            return Tensor(param.value)
        return self.tape.watch(param)

    def __contains__(self, name: str) -> bool:
        return name in self.store
