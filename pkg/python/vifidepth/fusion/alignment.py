"""Motion-aware feature alignment and occlusion-alleviated feature fusion.

Neighbour features are backward-warped to the target by their flow and
tagged with a fourier encoding of that flow. The two aligned neighbours are
blended by the merge mask and mixed with the target features through a fixed
per-pixel linear map.

The reduced variants drop one stage at a time: ``mafa`` blends the
neighbours evenly instead of by the merge mask, ``fa`` also leaves out the
flow encoding and ``stack`` mixes the raw, unwarped features.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vifidepth.fusion.interpolation import (
    FlowField,
    FusionError,
    MergeMask,
    backward_warp,
    pyramid_flow,
    pyramid_mask,
)
from vifidepth.geometry.imgrid import FloatArray, ImageGrid


class FusionVariant(StrEnum):
    STACK = "stack"
    FA = "fa"
    MAFA = "mafa"
    OAFF = "oaff"

    @property
    def warps(self) -> bool:
        return self is not FusionVariant.STACK

    @property
    def encodes(self) -> bool:
        return self in (FusionVariant.MAFA, FusionVariant.OAFF)

    @property
    def occlusion_aware(self) -> bool:
        return self is FusionVariant.OAFF


class FusionConfig(BaseModel):
    """Pyramid depth, encoding octaves, fusion variant and the optional channel mix.

    ``channel_mix`` rows are output channels; columns are the concatenated
    ``[target, merged]`` aligned channels. ``None`` selects the default
    half-and-half mix of raw feature channels.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_levels: int = Field(default=4, gt=0)
    pe_octaves: int = Field(default=10, gt=0)
    variant: FusionVariant = FusionVariant.OAFF
    channel_mix: Optional[tuple[tuple[float, ...], ...]] = None

    def encoded_channels(self) -> int:
        """Channels added by encoding one flow field: ``2 (2S + 1)``."""
        return 2 * (2 * self.pe_octaves + 1)

    def aligned_channels(self, feature_channels: int) -> int:
        """Channels of one aligned feature grid under :attr:`variant`."""
        return feature_channels + (self.encoded_channels() if self.variant.encodes else 0)

    def mix_matrix(self, out_channels: int, aligned_channels: int) -> FloatArray:
        if self.channel_mix is None:
            return default_channel_mix(out_channels, aligned_channels)
        mix = np.array(self.channel_mix, dtype=np.float64)
        if mix.shape != (out_channels, 2 * aligned_channels):
            raise FusionError(f"channel_mix must be {out_channels}x{2 * aligned_channels}, got {mix.shape}")
        return mix


# =========================
# Fourier encoding
# =========================


def fourier_encode(u: FloatArray | float, octaves: int = 10) -> FloatArray:
    """``[u, sin(2^0 pi u), cos(2^0 pi u), ..., sin(2^(S-1) pi u), cos(2^(S-1) pi u)]``.

    Works elementwise; the encoding is appended as a trailing axis of length
    ``2S + 1``.
    """
    arr = np.asarray(u, dtype=np.float64)
    angles = arr[..., None] * (np.pi * 2.0 ** np.arange(octaves))
    waves = np.stack([np.sin(angles), np.cos(angles)], axis=-1).reshape(arr.shape + (2 * octaves,))
    return np.concatenate([arr[..., None], waves], axis=-1)


def encode_flow(flow: FlowField, octaves: int = 10) -> FloatArray:
    """``g(F_x) || g(F_y)``, shape ``(H, W, 2 (2S + 1))``."""
    return np.concatenate([fourier_encode(flow.data[..., 0], octaves), fourier_encode(flow.data[..., 1], octaves)], -1)


# =========================
# MAFA / OAFF
# =========================


@dataclass(frozen=True)
class AlignedFeatures:
    """Target-aligned features, each with its encoded flow appended."""

    prev: ImageGrid
    next: ImageGrid
    target: ImageGrid
    feature_channels: int


def align_features(
    phi_prev: ImageGrid,
    phi_next: ImageGrid,
    phi_t: ImageGrid,
    F_prev: FlowField,
    F_next: FlowField,
    variant: FusionVariant = FusionVariant.MAFA,
    octaves: int = 10,
) -> AlignedFeatures:
    """Bring neighbour features to the target as ``variant`` prescribes.

    Neighbours are backward-warped when the variant warps, and every grid
    gets its flow encoding appended when the variant encodes; the target is
    paired with the encoding of zero flow.

    Raises:
        FusionError: If feature or flow shapes disagree.
    """
    shapes = {phi_prev.data.shape, phi_next.data.shape, phi_t.data.shape}
    if len(shapes) != 1:
        raise FusionError(f"Feature grids differ in shape: {sorted(shapes)}")
    if F_prev.shape != phi_t.shape or F_next.shape != phi_t.shape:
        raise FusionError(f"Flow shapes {F_prev.shape}, {F_next.shape} do not match features {phi_t.shape}")

    if variant.warps:
        phi_prev, _ = backward_warp(phi_prev, F_prev)
        phi_next, _ = backward_warp(phi_next, F_next)
    zero = FlowField.zeros(*phi_t.shape)

    def tag(features: ImageGrid, flow: FlowField) -> ImageGrid:
        if not variant.encodes:
            return features
        return ImageGrid(np.concatenate([features.data, encode_flow(flow, octaves)], axis=-1))

    return AlignedFeatures(
        prev=tag(phi_prev, F_prev),
        next=tag(phi_next, F_next),
        target=tag(phi_t, zero),
        feature_channels=phi_t.channels,
    )


def mafa_align(
    phi_prev: ImageGrid,
    phi_next: ImageGrid,
    phi_t: ImageGrid,
    F_prev: FlowField,
    F_next: FlowField,
    octaves: int = 10,
) -> AlignedFeatures:
    """Warp neighbour features to the target and append fourier-encoded flows."""
    return align_features(phi_prev, phi_next, phi_t, F_prev, F_next, FusionVariant.MAFA, octaves)


def default_channel_mix(out_channels: int, aligned_channels: int) -> FloatArray:
    """Average the first ``out_channels`` raw channels of the target and merged blocks."""
    if out_channels > aligned_channels:
        raise FusionError(f"Cannot select {out_channels} channels from {aligned_channels}")
    mix = np.zeros((out_channels, 2 * aligned_channels))
    idx = np.arange(out_channels)
    mix[idx, idx] = 0.5
    mix[idx, aligned_channels + idx] = 0.5
    return mix


def merge_aligned(varphi_prev: ImageGrid, varphi_next: ImageGrid, M: MergeMask) -> ImageGrid:
    """``chi = M * varphi_prev + (1 - M) * varphi_next``."""
    if varphi_prev.data.shape != varphi_next.data.shape or varphi_prev.shape != M.shape:
        raise FusionError(
            f"merge shape mismatch: {varphi_prev.data.shape}, {varphi_next.data.shape}, mask {M.shape}"
        )
    m = M.data
    return ImageGrid(m * varphi_prev.data + (1.0 - m) * varphi_next.data)


def oaff_fuse(
    varphi_prev: ImageGrid,
    varphi_next: ImageGrid,
    varphi_t: ImageGrid,
    M: MergeMask,
    mix: FloatArray,
) -> ImageGrid:
    """Blend the aligned neighbours by ``M`` and mix with the target per pixel.

    Args:
        mix: ``(C_out, 2 C')`` matrix applied to ``[varphi_t, chi]``.

    Raises:
        FusionError: On shape or mix dimension mismatch.
    """
    chi = merge_aligned(varphi_prev, varphi_next, M)
    if varphi_t.data.shape != chi.data.shape:
        raise FusionError(f"Target features {varphi_t.data.shape} do not match merged {chi.data.shape}")
    mix = np.asarray(mix, dtype=np.float64)
    stacked = np.concatenate([varphi_t.data, chi.data], axis=-1)
    if mix.ndim != 2 or mix.shape[1] != stacked.shape[-1]:
        raise FusionError(f"mix must have {stacked.shape[-1]} columns, got shape {mix.shape}")
    return ImageGrid(np.einsum("hwj,ij->hwi", stacked, mix))


def fuse_levels(
    phi_prev: Sequence[ImageGrid],
    phi_next: Sequence[ImageGrid],
    phi_t: Sequence[ImageGrid],
    F_prev: FlowField,
    F_next: FlowField,
    M: MergeMask,
    cfg: FusionConfig,
) -> list[ImageGrid]:
    """Align and fuse every pyramid level with ``cfg.variant``.

    Feature sequences are indexed by level ``k - 1``; flows and mask are given
    at full resolution and rescaled per level. Variants that are not
    occlusion-aware blend the neighbours with a constant 0.5 mask. Fused
    outputs keep the raw feature channel count.
    """
    n = cfg.num_levels
    if not len(phi_prev) == len(phi_next) == len(phi_t) == n:
        raise FusionError(f"Expected {n} feature levels, got {len(phi_prev)}, {len(phi_next)}, {len(phi_t)}")

    fused: list[ImageGrid] = []
    for k in range(1, n + 1):
        flow_prev = pyramid_flow(F_prev, k, n)
        flow_next = pyramid_flow(F_next, k, n)
        aligned = align_features(
            phi_prev[k - 1], phi_next[k - 1], phi_t[k - 1], flow_prev, flow_next, cfg.variant, cfg.pe_octaves
        )
        if cfg.variant.occlusion_aware:
            mask = pyramid_mask(M, k, n)
        else:
            mask = MergeMask.full(*aligned.target.shape, 0.5)
        mix = cfg.mix_matrix(aligned.feature_channels, aligned.target.channels)
        fused.append(oaff_fuse(aligned.prev, aligned.next, aligned.target, mask, mix))
    return fused
