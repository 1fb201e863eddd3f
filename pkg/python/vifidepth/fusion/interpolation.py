"""Flow fields, merge masks and flow-based frame interpolation.

A flow value at pixel ``p`` is the displacement to the pixel sampled by a
backward warp: ``warped(p) = source(p + F(p))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from vifidepth.geometry.imgrid import (
    FloatArray,
    ImageGrid,
    ValidityMask,
    bilinear_sample,
    pixel_lattice,
    resample_scale,
    scaled_shape,
)


class FusionError(ValueError):
    """Raised on inconsistent flow, mask or feature input."""


# =========================
# Types
# =========================


@dataclass(frozen=True)
class FlowField:
    """Two-channel displacement field ``(dx, dy)`` in pixels."""

    grid: ImageGrid

    def __post_init__(self) -> None:
        if self.grid.channels != 2:
            raise FusionError(f"FlowField needs 2 channels, got {self.grid.channels}")
        bound = math.hypot(self.grid.height, self.grid.width)
        peak = float(np.max(np.hypot(self.grid.data[..., 0], self.grid.data[..., 1])))
        if peak > bound:
            raise FusionError(f"Flow magnitude {peak:.3f} exceeds the image diagonal {bound:.3f}")

    @classmethod
    def from_array(cls, data: FloatArray) -> FlowField:
        return cls(ImageGrid(data))

    @classmethod
    def zeros(cls, height: int, width: int) -> FlowField:
        return cls(ImageGrid(np.zeros((height, width, 2))))

    @property
    def data(self) -> FloatArray:
        return self.grid.data

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape


@dataclass(frozen=True)
class MergeMask:
    """Single-channel blend weight in [0, 1]."""

    grid: ImageGrid

    def __post_init__(self) -> None:
        if self.grid.channels != 1:
            raise FusionError(f"MergeMask needs 1 channel, got {self.grid.channels}")
        if self.grid.data.min() < 0.0 or self.grid.data.max() > 1.0:
            raise FusionError("MergeMask values must lie in [0, 1]")

    @classmethod
    def from_array(cls, data: FloatArray) -> MergeMask:
        return cls(ImageGrid(data))

    @classmethod
    def full(cls, height: int, width: int, value: float) -> MergeMask:
        return cls(ImageGrid.full(height, width, value))

    @property
    def data(self) -> FloatArray:
        return self.grid.data

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape


# =========================
# Warping and merging
# =========================


def backward_warp(grid: ImageGrid, flow: FlowField) -> tuple[ImageGrid, ValidityMask]:
    """Sample ``grid`` at ``p + F(p)``; out-of-image samples are border-clamped and invalid."""
    if grid.shape != flow.shape:
        raise FusionError(f"Grid shape {grid.shape} does not match flow shape {flow.shape}")
    sample = bilinear_sample(grid, pixel_lattice(*grid.shape) + flow.data)
    return sample.image, sample.mask


def vfi_merge(I_a: ImageGrid, I_b: ImageGrid, M: MergeMask) -> ImageGrid:
    """``M * I_a + (1 - M) * I_b`` per pixel."""
    if I_a.data.shape != I_b.data.shape or I_a.shape != M.shape:
        raise FusionError(f"vfi_merge shape mismatch: {I_a.data.shape}, {I_b.data.shape}, mask {M.shape}")
    m = M.data
    return ImageGrid(m * I_a.data + (1.0 - m) * I_b.data)


def synthesize_intermediate(
    I_prev: ImageGrid,
    I_next: ImageGrid,
    F_to_prev: FlowField,
    F_to_next: FlowField,
    M: MergeMask,
) -> ImageGrid:
    """Middle frame from its two neighbours, intermediate flows and a merge mask."""
    if I_prev.data.shape != I_next.data.shape:
        raise FusionError(f"Neighbour frames differ in shape: {I_prev.data.shape} vs {I_next.data.shape}")
    from_prev, _ = backward_warp(I_prev, F_to_prev)
    from_next, _ = backward_warp(I_next, F_to_next)
    return vfi_merge(from_prev, from_next, M)


# =========================
# Pyramids
# =========================


def level_ratio(level: int, num_levels: int) -> float:
    """Spatial ratio ``2^-(k-1)`` of pyramid level ``k`` in ``[1, num_levels]``.

    Raises:
        FusionError: If ``level`` is outside the pyramid.
    """
    if not 1 <= level <= num_levels:
        raise FusionError(f"Pyramid level must be in [1, {num_levels}], got {level}")
    return 2.0 ** -(level - 1)


def level_shape(shape: tuple[int, int], level: int, num_levels: int) -> tuple[int, int]:
    return scaled_shape(shape, level_ratio(level, num_levels))


def pyramid_flow(F: FlowField, level: int, num_levels: int = 4) -> FlowField:
    """Resample a full-resolution flow to level ``k`` and convert it to level-``k`` pixels.

    The base shape is the flow's own shape: ``F`` must be given at level 1,
    and the result has shape ``level_shape(F.shape, level, num_levels)``.
    ``num_levels`` only bounds ``level``.

    Raises:
        FusionError: If ``level`` is outside ``[1, num_levels]``.
    """
    ratio = level_ratio(level, num_levels)
    resampled = resample_scale(F.grid, ratio)
    (h, w), (hk, wk) = F.shape, resampled.shape
    units = np.array([wk / w, hk / h])
    return FlowField(ImageGrid(resampled.data * units))


def pyramid_mask(M: MergeMask, level: int, num_levels: int = 4) -> MergeMask:
    """Resample a merge mask to level ``k``; values stay in [0, 1]."""
    ratio = level_ratio(level, num_levels)
    resampled = resample_scale(M.grid, ratio)
    return MergeMask(ImageGrid(np.clip(resampled.data, 0.0, 1.0)))
