"""Bit-exact readers and writers for the bundle file formats."""

from .errors import FormatError
from .flo import read_flo, write_flo
from .pfm import read_pfm, write_pfm
from .ppm import read_ppm, write_ppm

__all__ = [
    "FormatError",
    "read_flo",
    "read_pfm",
    "read_ppm",
    "write_flo",
    "write_pfm",
    "write_ppm",
]
