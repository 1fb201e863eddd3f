"""Synthetic height-field world and its ray caster.

World frame: the surface is ``Z = h(X, Y)`` and cameras look roughly along
``+Z``. Camera poses are world-to-camera transforms ``P_c = R P_w + t``.
Albedo and feature fields are band-limited sums of sinusoids over ``(X, Y)``
of the hit point, so rendered images are Lambertian and view independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from vifidepth.fusion.interpolation import FlowField
from vifidepth.geometry.camera import Intrinsics, PoseSE3
from vifidepth.geometry.imgrid import FloatArray, ImageGrid, ValidityMask, pixel_lattice
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory
from vifidepth.libs.worker import map_row_chunks

logger = VifiDepthLoggerFactory.get_logger(__name__)

DEPTH_RANGE = (1.0, 50.0)
BISECTION_STEPS = 60
OCCLUSION_MARGIN = 0.01
_MIN_Z = 1e-6
# landing pixels this far past the border still count as inside
_EDGE_SLACK = 1e-9


class SceneError(RuntimeError):
    """Raised when a camera configuration cannot be rendered."""


class SceneConfig(BaseModel):
    """Procedural scene parameters (meters unless stated)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["surface", "plane"] = "surface"
    plane_depth: float = Field(default=8.0, gt=0.0)
    base_depth: float = Field(default=8.0, gt=0.0)
    relief_amplitude: float = Field(default=0.8, ge=0.0)
    relief_terms: int = Field(default=4, gt=0)
    relief_wavelength: tuple[float, float] = (4.0, 10.0)
    texture_terms: int = Field(default=6, gt=0)
    texture_wavelength: tuple[float, float] = (2.0, 6.0)
    texture_contrast: float = Field(default=0.4, gt=0.0, le=0.5)
    feature_channels: int = Field(default=4, gt=0)

    @model_validator(mode="after")
    def _check_ranges(self) -> SceneConfig:
        for name in ("relief_wavelength", "texture_wavelength"):
            lo, hi = getattr(self, name)
            if not 0.0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        lo_d, hi_d = self.depth_bounds()
        if lo_d < DEPTH_RANGE[0] or hi_d > DEPTH_RANGE[1]:
            raise ValueError(f"Surface depth range {(lo_d, hi_d)} leaves {DEPTH_RANGE}")
        return self

    def depth_bounds(self) -> tuple[float, float]:
        """Closed bounds of ``h`` over the whole world."""
        if self.mode == "plane":
            return (self.plane_depth, self.plane_depth)
        return (self.base_depth - self.relief_amplitude, self.base_depth + self.relief_amplitude)


# =========================
# Scene
# =========================


@dataclass(frozen=True)
class Waves:
    """``offset + sum_k a_k sin(2 pi (d_k . xy) / l_k + phi_k)`` per output channel.

    Arrays are shaped ``(channels, terms[, 2])``.
    """

    offset: FloatArray
    amplitude: FloatArray
    direction: FloatArray
    wavelength: FloatArray
    phase: FloatArray

    @classmethod
    def draw(
        cls,
        rng: np.random.Generator,
        channels: int,
        terms: int,
        wavelength: tuple[float, float],
        total_amplitude: float,
        offset: float,
    ) -> Waves:
        angles = rng.uniform(0.0, np.pi, size=(channels, terms))
        weights = rng.uniform(0.5, 1.0, size=(channels, terms))
        return cls(
            offset=np.full(channels, offset),
            amplitude=total_amplitude * weights / weights.sum(axis=1, keepdims=True),
            direction=np.stack([np.cos(angles), np.sin(angles)], axis=-1),
            wavelength=rng.uniform(wavelength[0], wavelength[1], size=(channels, terms)),
            phase=rng.uniform(0.0, 2.0 * np.pi, size=(channels, terms)),
        )

    def __call__(self, X: FloatArray, Y: FloatArray) -> FloatArray:
        """Evaluate at world ``(X, Y)``; output shape ``X.shape + (channels,)``."""
        out = np.empty(X.shape + (self.offset.size,))
        for c in range(self.offset.size):
            acc = np.full(X.shape, self.offset[c])
            for k in range(self.amplitude.shape[1]):
                dx, dy = self.direction[c, k]
                arg = (2.0 * np.pi / self.wavelength[c, k]) * (dx * X + dy * Y) + self.phase[c, k]
                acc = acc + self.amplitude[c, k] * np.sin(arg)
            out[..., c] = acc
        return out


@dataclass(frozen=True)
class Scene:
    """Height field, albedo and feature fields of one seeded world."""

    config: SceneConfig
    seed: int
    relief: Waves
    albedo_waves: Waves
    feature_waves: Waves

    def height(self, X: FloatArray, Y: FloatArray) -> FloatArray:
        if self.config.mode == "plane":
            return np.full(np.shape(X), self.config.plane_depth)
        return self.relief(X, Y)[..., 0]

    def albedo(self, X: FloatArray, Y: FloatArray) -> FloatArray:
        return np.clip(self.albedo_waves(X, Y), 0.0, 1.0)

    def features(self, X: FloatArray, Y: FloatArray) -> FloatArray:
        return self.feature_waves(X, Y)


def generate_scene(seed: int, config: SceneConfig | None = None) -> Scene:
    """Build a deterministic scene from ``seed``."""
    config = config if config is not None else SceneConfig()
    rng = np.random.default_rng(seed)
    relief = Waves.draw(
        rng, 1, config.relief_terms, config.relief_wavelength, config.relief_amplitude, config.base_depth
    )
    albedo = Waves.draw(rng, 3, config.texture_terms, config.texture_wavelength, config.texture_contrast, 0.5)
    features = Waves.draw(rng, config.feature_channels, config.texture_terms, config.texture_wavelength, 1.0, 0.0)
    return Scene(config=config, seed=seed, relief=relief, albedo_waves=albedo, feature_waves=features)


# =========================
# Ray casting
# =========================


def camera_center(pose: PoseSE3) -> FloatArray:
    return -pose.rotation.T @ pose.translation


def cast_rays(scene: Scene, pose: PoseSE3, K: Intrinsics, pixels: FloatArray) -> FloatArray:
    """World hit points ``(..., 3)`` of the rays through ``pixels`` ``(..., 2)``.

    The ray is parameterized by world ``Z`` and the root of
    ``z - h(X(z), Y(z))`` is bracketed by the surface bounds and refined by a
    fixed number of bisection steps.

    Raises:
        SceneError: If a ray does not point toward the surface or the camera
            is not in front of it.
    """
    R = pose.rotation
    center = camera_center(pose)
    a = (pixels[..., 0] - K.cx) / K.fx
    b = (pixels[..., 1] - K.cy) / K.fy
    # world ray direction R^T [a, b, 1], expanded per component
    dx = R[0, 0] * a + R[1, 0] * b + R[2, 0]
    dy = R[0, 1] * a + R[1, 1] * b + R[2, 1]
    dz = R[0, 2] * a + R[1, 2] * b + R[2, 2]
    if np.any(dz <= 0.0):
        raise SceneError("Some camera rays point away from the surface")

    z_min, z_max = scene.config.depth_bounds()
    cz = float(center[2])
    if cz >= z_min:
        raise SceneError(f"Camera at Z = {cz:.3f} is not in front of the surface (min depth {z_min:.3f})")

    def point_at(z: FloatArray) -> tuple[FloatArray, FloatArray]:
        s = (z - cz) / dz
        return center[0] + s * dx, center[1] + s * dy

    lo = np.full(a.shape, z_min)
    hi = np.full(a.shape, z_max)
    if z_max > z_min:
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            X, Y = point_at(mid)
            below = mid - scene.height(X, Y) < 0.0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
    z_hit = 0.5 * (lo + hi) if z_max > z_min else lo
    X, Y = point_at(z_hit)
    return np.stack([X, Y, z_hit], axis=-1)


def world_to_camera(pose: PoseSE3, points: FloatArray) -> FloatArray:
    R, t = pose.rotation, pose.translation
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    return np.stack(
        [
            R[0, 0] * x + R[0, 1] * y + R[0, 2] * z + t[0],
            R[1, 0] * x + R[1, 1] * y + R[1, 2] * z + t[1],
            R[2, 0] * x + R[2, 1] * y + R[2, 2] * z + t[2],
        ],
        axis=-1,
    )


@dataclass(frozen=True)
class RenderedView:
    """Image, camera-frame depth and world hit points of one camera."""

    image: ImageGrid
    depth: ImageGrid
    points: FloatArray


def render_view(
    scene: Scene,
    pose: PoseSE3,
    K: Intrinsics,
    shape: tuple[int, int],
    jobs: int = 1,
) -> RenderedView:
    """Ray-cast every pixel; rows are split across ``jobs`` threads."""
    h, w = shape
    lattice = pixel_lattice(h, w)

    def band(rows: slice) -> FloatArray:
        pts = cast_rays(scene, pose, K, lattice[rows])
        return np.concatenate([pts, scene.albedo(pts[..., 0], pts[..., 1])], axis=-1)

    out = map_row_chunks(band, h, jobs)
    points = out[..., :3]
    depth = world_to_camera(pose, points)[..., 2]
    return RenderedView(image=ImageGrid(out[..., 3:]), depth=ImageGrid(depth), points=points)


def render_features(
    scene: Scene,
    pose: PoseSE3,
    K: Intrinsics,
    shape: tuple[int, int],
    channels: int | None = None,
    jobs: int = 1,
) -> ImageGrid:
    """Feature grid anchored to the world points seen by each pixel."""
    h, w = shape
    lattice = pixel_lattice(h, w)

    def band(rows: slice) -> FloatArray:
        pts = cast_rays(scene, pose, K, lattice[rows])
        return scene.features(pts[..., 0], pts[..., 1])

    features = map_row_chunks(band, h, jobs)
    if channels is not None:
        features = features[..., :channels]
    return ImageGrid(features)


def ground_truth_flow(
    scene: Scene,
    pose_a: PoseSE3,
    pose_b: PoseSE3,
    K: Intrinsics,
    shape: tuple[int, int],
    jobs: int = 1,
) -> tuple[FlowField, ValidityMask]:
    """Flow from view ``a`` to view ``b`` and the occlusion of ``a``'s pixels in ``b``.

    Occlusion is 1 where the point lands outside ``b`` or behind ``b``'s
    visible surface by more than 1 cm; flow there is still the geometric
    displacement, or 0 when the point is behind camera ``b``.
    """
    h, w = shape
    lattice = pixel_lattice(h, w)
    diagonal = float(np.hypot(h, w))

    def band(rows: slice) -> FloatArray:
        pix = lattice[rows]
        pts = cast_rays(scene, pose_a, K, pix)
        q = world_to_camera(pose_b, pts)
        ahead = q[..., 2] > _MIN_Z
        z = np.where(ahead, q[..., 2], 1.0)
        landing = np.stack([K.fx * q[..., 0] / z + K.cx, K.fy * q[..., 1] / z + K.cy], axis=-1)
        flow = np.where(ahead[..., None], landing - pix, 0.0)

        lo, hi_x, hi_y = -_EDGE_SLACK, w - 1 + _EDGE_SLACK, h - 1 + _EDGE_SLACK
        inside = ahead & (landing[..., 0] >= lo) & (landing[..., 0] <= hi_x)
        inside &= (landing[..., 1] >= lo) & (landing[..., 1] <= hi_y)
        clamped = np.stack([np.clip(landing[..., 0], 0, w - 1), np.clip(landing[..., 1], 0, h - 1)], axis=-1)
        seen = world_to_camera(pose_b, cast_rays(scene, pose_b, K, clamped))[..., 2]
        occluded = ~inside | (q[..., 2] > seen + OCCLUSION_MARGIN)

        too_far = np.hypot(flow[..., 0], flow[..., 1]) > diagonal
        flow = np.where(too_far[..., None], 0.0, flow)
        return np.concatenate([flow, (occluded | too_far)[..., None].astype(np.float64)], axis=-1)

    out = map_row_chunks(band, h, jobs)
    occluded = out[..., 2]
    logger.debug("ground_truth_flow: %.1f%% occluded", 100.0 * float(occluded.mean()))
    return FlowField(ImageGrid(out[..., :2])), ValidityMask(occluded)
