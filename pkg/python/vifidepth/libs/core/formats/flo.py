"""Middlebury ``.flo`` optical flow codec.

Layout: 4-byte magic ``PIEH`` (float 202021.25), int32 width, int32 height,
then interleaved float32 ``(dx, dy)`` pairs in row-major order. All values
little-endian.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import numpy.typing as npt

from .errors import FormatError

_MAGIC = b"PIEH"
_DIMS = struct.Struct("<ii")


def encode_flo(flow: npt.ArrayLike) -> bytes:
    """Serialize a ``(H, W, 2)`` flow array to ``.flo`` bytes.

    Raises:
        FormatError: If the array is not two-channel.
    """
    arr = np.asarray(flow, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise FormatError(f".flo holds (H, W, 2) flow, got array of shape {arr.shape}")
    height, width, _ = arr.shape
    return _MAGIC + _DIMS.pack(width, height) + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def decode_flo(blob: bytes, source: str = "<bytes>") -> npt.NDArray[np.float64]:
    """Parse ``.flo`` bytes into a float64 ``(H, W, 2)`` array.

    Raises:
        FormatError: On a bad magic, non-positive size, or a payload whose
            length does not match the header.
    """
    if len(blob) < 12 or blob[:4] != _MAGIC:
        raise FormatError(f"Missing PIEH magic: {source}")

    width, height = _DIMS.unpack_from(blob, 4)
    if width <= 0 or height <= 0:
        raise FormatError(f"Invalid .flo dimensions {width}x{height}: {source}")

    payload = blob[12:]
    expected = width * height * 2 * 4
    if len(payload) != expected:
        raise FormatError(f".flo payload is {len(payload)} bytes, expected {expected}: {source}")

    return np.frombuffer(payload, dtype="<f4").reshape(height, width, 2).astype(np.float64)


def write_flo(path: Path, flow: npt.ArrayLike) -> None:
    """Write a flow array as a ``.flo`` file."""
    path.write_bytes(encode_flo(flow))


def read_flo(path: Path) -> npt.NDArray[np.float64]:
    """Read a ``.flo`` file into a float64 ``(H, W, 2)`` array."""
    return decode_flo(path.read_bytes(), source=str(path))
