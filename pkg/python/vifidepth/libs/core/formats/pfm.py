"""Portable Float Map codec.

Layout: identifier line ``Pf`` (1 channel) or ``PF`` (3 channels), a
``width height`` line, a scale line whose negative sign marks little-endian
data, then float32 samples with rows stored bottom-up.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import numpy.typing as npt

from .errors import FormatError

_SCALE_LINE = b"-1.0\n"


def encode_pfm(data: npt.ArrayLike) -> bytes:
    """Serialize a ``(H, W)``, ``(H, W, 1)`` or ``(H, W, 3)`` array to PFM bytes.

    Raises:
        FormatError: If the channel count is not 1 or 3.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[..., None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise FormatError(f"PFM holds 1 or 3 channels, got array of shape {arr.shape}")

    height, width, channels = arr.shape
    identifier = b"Pf\n" if channels == 1 else b"PF\n"
    header = identifier + f"{width} {height}\n".encode("ascii") + _SCALE_LINE
    payload = np.ascontiguousarray(arr[::-1], dtype="<f4").tobytes()
    return header + payload


def decode_pfm(blob: bytes, source: str = "<bytes>") -> npt.NDArray[np.float64]:
    """Parse PFM bytes into a float64 ``(H, W, C)`` array.

    Raises:
        FormatError: On an unknown identifier, malformed header, or a payload
            whose length does not match the header.
    """
    lines = blob.split(b"\n", 3)
    if len(lines) < 4:
        raise FormatError(f"Truncated PFM header: {source}")

    identifier, dims, scale_text, payload = lines
    identifier = identifier.strip()
    if identifier == b"Pf":
        channels = 1
    elif identifier == b"PF":
        channels = 3
    else:
        raise FormatError(f"Unrecognized PFM identifier {identifier!r}: {source}")

    try:
        width, height = (int(v) for v in dims.split())
        scale = float(scale_text)
    except ValueError as e:
        raise FormatError(f"Malformed PFM header: {source}") from e
    if width <= 0 or height <= 0 or scale == 0.0:
        raise FormatError(f"Invalid PFM dimensions or scale: {source}")

    expected = width * height * channels * 4
    if len(payload) != expected:
        raise FormatError(f"PFM payload is {len(payload)} bytes, expected {expected}: {source}")

    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(payload, dtype=dtype).reshape(height, width, channels)[::-1]
    return arr.astype(np.float64)


def write_pfm(path: Path, data: npt.ArrayLike) -> None:
    """Write an array as a PFM file."""
    path.write_bytes(encode_pfm(data))


def read_pfm(path: Path) -> npt.NDArray[np.float64]:
    """Read a PFM file into a float64 ``(H, W, C)`` array."""
    return decode_pfm(path.read_bytes(), source=str(path))
