"""
Checkpoint - Binary Parameter Files
===================================

One file holds a version tag, the model spec as JSON and every parameter
as (name, shape, little-endian float64 payload). Writing the same spec and
values twice produces the same bytes.

Layout::

    b"MQFC" | u32 version | u32 len | spec JSON
    u32 n_params
    n_params x ( u32 len | name | u32 ndim | ndim x u64 dim | f64 payload )
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from ..errors import DataError
from .tensor import ParameterStore

# Configure module logger
logger = logging.getLogger(__name__)

MAGIC = b"MQFC"
CHECKPOINT_VERSION = 1


def encode_checkpoint(spec: Dict[str, Any], store: ParameterStore) -> bytes:
    """Serialise a spec mapping and parameter values to bytes."""
    spec_bytes = json.dumps(spec, sort_keys=True, separators=(",", ":")).encode("utf-8")
    chunks = [
        MAGIC,
        struct.pack("<I", CHECKPOINT_VERSION),
        struct.pack("<I", len(spec_bytes)),
        spec_bytes,
        struct.pack("<I", len(store)),
    ]
    for param in store:
        name = param.name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<I", param.value.ndim))
        chunks.append(struct.pack(f"<{param.value.ndim}Q", *param.value.shape))
        chunks.append(param.value.astype("<f8").tobytes(order="C"))
    return b"".join(chunks)


def decode_checkpoint(payload: bytes) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """
    Parse checkpoint bytes.

    Returns:
        (spec mapping, parameter values keyed by name, in file order)

    Raises:
        DataError: On a bad magic tag, unknown version or truncated file
    """
    if payload[:4] != MAGIC:
        raise DataError("Not a checkpoint file (bad magic tag)")
    offset = 4

    def _take(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(payload):
            raise DataError("Checkpoint file is truncated")
        values = struct.unpack_from(fmt, payload, offset)
        offset += size
        return values

    def _bytes(length: int) -> bytes:
        nonlocal offset
        if offset + length > len(payload):
            raise DataError("Checkpoint file is truncated")
        chunk = payload[offset:offset + length]
        offset += length
        return chunk

    (version,) = _take("<I")
    if version != CHECKPOINT_VERSION:
        raise DataError(f"Unsupported checkpoint version {version}")
    (spec_len,) = _take("<I")
    spec = json.loads(_bytes(spec_len).decode("utf-8"))
    (count,) = _take("<I")

    values: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = _take("<I")
        name = _bytes(name_len).decode("utf-8")
        (ndim,) = _take("<I")
        shape = _take(f"<{ndim}Q") if ndim else ()
        n_values = int(np.prod(shape)) if ndim else 1
        raw = _bytes(8 * n_values)
        values[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)

    if offset != len(payload):
        raise DataError("Checkpoint file has trailing bytes")
    return spec, values


def save_checkpoint(
    path: Union[str, Path],
    spec: Dict[str, Any],
    store: ParameterStore
) -> Path:
    """Write a checkpoint file and return its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(spec, store))
    logger.info(f"Checkpoint written: {path} ({len(store)} parameters)")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """Read a checkpoint file written by save_checkpoint."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Checkpoint not found: {path}")
    spec, values = decode_checkpoint(path.read_bytes())
    logger.info(f"Checkpoint loaded: {path} ({len(values)} parameters)")
    return spec, values
