"""Binary PPM (P6, maxval 255) codec for [0, 1] intensity images."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
import numpy.typing as npt

from .errors import FormatError

# P6 <ws> width <ws> height <ws> maxval <single ws>, with optional # comments
_HEADER = re.compile(rb"\AP6(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)\s")


def quantize(data: npt.ArrayLike) -> npt.NDArray[np.uint8]:
    """Map [0, 1] intensities to 8-bit codes with ``round(clip(v, 0, 1) * 255)``."""
    arr = np.asarray(data, dtype=np.float64)
    return np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)


def encode_ppm(data: npt.ArrayLike) -> bytes:
    """Serialize a 1- or 3-channel image to P6 bytes.

    Single-channel images are replicated to RGB.

    Raises:
        FormatError: If the channel count is not 1 or 3.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[..., None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise FormatError(f"PPM holds 1 or 3 channels, got array of shape {arr.shape}")
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)

    height, width, _ = arr.shape
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + quantize(arr).tobytes()


def decode_ppm(blob: bytes, source: str = "<bytes>") -> npt.NDArray[np.float64]:
    """Parse P6 bytes into a float64 ``(H, W, 3)`` array in [0, 1].

    Raises:
        FormatError: On a malformed header, unsupported maxval, or a payload
            whose length does not match the header.
    """
    match = _HEADER.match(blob)
    if match is None:
        raise FormatError(f"Not a binary PPM (P6) file: {source}")

    width, height, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise FormatError(f"Unsupported PPM maxval {maxval}: {source}")

    payload = blob[match.end() :]
    expected = width * height * 3
    if len(payload) != expected:
        raise FormatError(f"PPM payload is {len(payload)} bytes, expected {expected}: {source}")

    codes = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return codes.astype(np.float64) / 255.0


def write_ppm(path: Path, data: npt.ArrayLike) -> None:
    """Write an image as a binary PPM file."""
    path.write_bytes(encode_ppm(data))


def read_ppm(path: Path) -> npt.NDArray[np.float64]:
    """Read a binary PPM file into a float64 ``(H, W, 3)`` array."""
    return decode_ppm(path.read_bytes(), source=str(path))
