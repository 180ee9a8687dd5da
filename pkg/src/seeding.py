"""
Seeding - Named Random Streams
==============================

All randomness in a run flows from one integer seed. Each consumer asks
for a stream by name (``"init"``, ``("cut", epoch)``, ...), so drawing
more numbers in one place never shifts the numbers drawn in another.
"""

import zlib
from typing import Union

import numpy as np

StreamKey = Union[str, int]


def _key(name: StreamKey) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name)
    return zlib.crc32(str(name).encode("utf-8"))


def named_stream(seed: int, *names: StreamKey) -> np.random.Generator:
    """
    Return an independent generator for ``seed`` and a stream path.

    Args:
        seed: Non-negative run seed
        *names: Stream path components (strings or integers)

    Returns:
        numpy Generator seeded from (seed, names...)

    Example:
        >>> rng = named_stream(7, "cut", 3)
        >>> rng.integers(0, 10)
    """
    if seed < 0:
        raise ValueError(f"Seed must be non-negative, got {seed}")
    entropy = [int(seed)] + [_key(name) for name in names]
    return np.random.default_rng(np.random.SeedSequence(entropy))
