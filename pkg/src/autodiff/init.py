"""Weight initialisers."""

from typing import Sequence

import numpy as np


def glorot_uniform(
    rng: np.random.Generator,
    fan_in: int,
    fan_out: int,
    shape: Sequence[int]
) -> np.ndarray:
    """Uniform on +-sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=tuple(shape))


def constant(shape: Sequence[int], value: float = 0.0) -> np.ndarray:
    return np.full(tuple(shape), float(value))
