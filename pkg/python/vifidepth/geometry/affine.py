"""Spatial augmentation: rotation, resize and crop as one affine map.

The augmented image is modeled as a second picture taken by the same camera.
Zooming by ``f_s`` divides depth by ``f_s``, and camera-frame points map
linearly through the rectification matrix ``R_c``:

    P_aug = R_c P,   R_c = K^-1 R K + K^-1 [0 0 q]

Pixel map (``c`` image center, ``p`` crop center, ``theta`` counterclockwise):

    [x~, y~]^T = R2 (f_s ([x, y]^T - c)) + f_s (c - p) + c
    R2 = [[cos, sin], [-sin, cos]]
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vifidepth.geometry.camera import Intrinsics, LinearPose, Pose
from vifidepth.geometry.imgrid import (
    MASK_THRESHOLD,
    FloatArray,
    ImageGrid,
    SampleResult,
    ValidityMask,
    bilinear_sample,
    pixel_lattice,
)

SCALE_RANGE = (1.2, 2.0)
MAX_ROTATION_DEG = 5.0


class AffineError(ValueError):
    """Raised on invalid augmentation input."""


# =========================
# Parameters
# =========================


class AffineParams(BaseModel):
    """Augmentation parameters for an ``height x width`` image.

    Attributes:
        scale: Resize factor ``f_s >= 1``.
        theta: Rotation in radians, counterclockwise positive.
        crop_x: Crop center ``p_x`` in original pixel coordinates.
        crop_y: Crop center ``p_y`` in original pixel coordinates.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    height: int = Field(gt=0)
    width: int = Field(gt=0)
    scale: float = Field(default=1.0, ge=1.0)
    theta: float = Field(default=0.0, ge=-math.pi, le=math.pi)
    crop_x: float
    crop_y: float

    @classmethod
    def identity(cls, shape: tuple[int, int]) -> AffineParams:
        h, w = shape
        return cls(height=h, width=w, crop_x=(w - 1) / 2.0, crop_y=(h - 1) / 2.0)

    @classmethod
    def centered(cls, shape: tuple[int, int], scale: float = 1.0, theta: float = 0.0) -> AffineParams:
        """Zoom/rotation about the image center."""
        h, w = shape
        return cls(height=h, width=w, scale=scale, theta=theta, crop_x=(w - 1) / 2.0, crop_y=(h - 1) / 2.0)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def image_center(self) -> tuple[float, float]:
        return ((self.width - 1) / 2.0, (self.height - 1) / 2.0)

    @property
    def crop_center(self) -> tuple[float, float]:
        return (self.crop_x, self.crop_y)

    @property
    def rotation2(self) -> FloatArray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, s], [-s, c]])


@dataclass(frozen=True)
class RectificationMatrix:
    """Linear map from original to augmented camera-frame points."""

    matrix: FloatArray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise AffineError(f"Rectification matrix must be 3x3, got {m.shape}")
        if abs(float(np.linalg.det(m))) <= 1e-12:
            raise AffineError("Rectification matrix is singular")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def inverse(self) -> FloatArray:
        return np.asarray(np.linalg.inv(self.matrix), dtype=np.float64)


# =========================
# Pixel maps
# =========================


def _as_points(pixel: FloatArray | tuple[float, float]) -> FloatArray:
    return np.asarray(pixel, dtype=np.float64)


def affine_pixel(params: AffineParams, pixel: FloatArray | tuple[float, float]) -> FloatArray:
    """Map original pixel(s) ``(..., 2)`` to augmented pixel coordinates."""
    pts = _as_points(pixel)
    c = np.array(params.image_center)
    p = np.array(params.crop_center)
    f = params.scale
    return (f * (pts - c)) @ params.rotation2.T + f * (c - p) + c


def affine_pixel_inverse(params: AffineParams, pixel: FloatArray | tuple[float, float]) -> FloatArray:
    """Map augmented pixel(s) ``(..., 2)`` back to original pixel coordinates."""
    pts = _as_points(pixel)
    c = np.array(params.image_center)
    p = np.array(params.crop_center)
    f = params.scale
    return ((pts - c - f * (c - p)) @ params.rotation2) / f + c


def affine_depth_value(depth: float, scale: float) -> float:
    """Depth of the same point in the augmented view: ``D / f_s``.

    Raises:
        AffineError: If ``depth`` is not positive.
    """
    if not depth > 0.0:
        raise AffineError(f"depth must be positive, got {depth}")
    return depth / scale


# =========================
# Dense warps
# =========================


@dataclass(frozen=True)
class AffineWarp:
    """Resampled grid, its validity, and the sampler for adjoints."""

    grid: ImageGrid
    mask: ValidityMask
    sample: SampleResult


def affine_image(image: ImageGrid, params: AffineParams) -> AffineWarp:
    """Augment an image: each output pixel samples the original at the inverse map.

    Output pixels whose source falls outside the original are flagged invalid.
    """
    _check_shape(image, params)
    src = affine_pixel_inverse(params, pixel_lattice(*image.shape))
    sample = bilinear_sample(image, src)
    return AffineWarp(sample.image, sample.mask, sample)


def affine_inverse_depth(depth_aug: ImageGrid, params: AffineParams) -> AffineWarp:
    """Restore an augmented-view depth to the original view.

    ``D^(x) = D~(affine_pixel(x))``. The mask is the hard coverage of the
    original view by the augmented one.
    """
    _check_shape(depth_aug, params)
    dst = affine_pixel(params, pixel_lattice(*depth_aug.shape))
    sample = bilinear_sample(depth_aug, dst)
    mask = ValidityMask.from_bool(sample.mask.values >= MASK_THRESHOLD)
    return AffineWarp(sample.image, mask, sample)


def _check_shape(grid: ImageGrid, params: AffineParams) -> None:
    if grid.shape != params.shape:
        raise AffineError(f"Grid shape {grid.shape} does not match augmentation shape {params.shape}")


# =========================
# Rectification
# =========================


def rectification_matrix(K: Intrinsics, params: AffineParams) -> RectificationMatrix:
    """``R_c = K^-1 R K + K^-1 [0 0 q]`` with

    ``q = R [-c_x, -c_y, 1/f_s - 1]^T + [(c_x - p_x) + c_x/f_s, (c_y - p_y) + c_y/f_s, 0]^T``.

    ``K^-1 R K`` is expanded in closed form so the identity and centered-zoom
    cases come out exact.
    """
    cos_t, sin_t = math.cos(params.theta), math.sin(params.theta)
    cx, cy = params.image_center
    px, py = params.crop_center
    f = params.scale
    fx, fy, kx, ky = K.fx, K.fy, K.cx, K.cy

    qz = 1.0 / f - 1.0
    qx = cos_t * (-cx) + sin_t * (-cy) + (cx - px) + cx / f
    qy = -sin_t * (-cx) + cos_t * (-cy) + (cy - py) + cy / f

    # K^-1 R K, then K^-1 q in the third column
    m = np.array(
        [
            [cos_t, sin_t * fy / fx, (cos_t * kx + sin_t * ky - kx) / fx],
            [-sin_t * fx / fy, cos_t, (-sin_t * kx + cos_t * ky - ky) / fy],
            [0.0, 0.0, 1.0],
        ]
    )
    m[0, 2] += (qx - kx * qz) / fx
    m[1, 2] += (qy - ky * qz) / fy
    m[2, 2] += qz
    return RectificationMatrix(m)


def rectify_pose(T: Pose, R_c: RectificationMatrix) -> LinearPose:
    """``R~ = R_c R R_c^-1``, ``t~ = R_c t``."""
    return LinearPose(R_c.matrix @ T.linear @ R_c.inverse, R_c.matrix @ T.translation)


def rectified_pose_vjp(
    R_c: RectificationMatrix, d_linear: FloatArray, d_translation: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """Pull cotangents of ``(R~, t~)`` back to the unrectified ``(R, t)``."""
    inv = R_c.inverse
    return R_c.matrix.T @ d_linear @ inv.T, R_c.matrix.T @ d_translation


# =========================
# Sampling
# =========================


def sample_aug_params(
    rng: np.random.Generator,
    shape: tuple[int, int],
    scale_range: tuple[float, float] = SCALE_RANGE,
    max_rotation_deg: float = MAX_ROTATION_DEG,
) -> AffineParams:
    """Draw a random augmentation.

    ``f_s`` and ``theta`` are uniform over their ranges. The crop center is
    uniform over the positions that keep every output pixel inside the
    original image; when no such position exists it falls back to the image
    center. Only ``rng`` is mutated.
    """
    lo, hi = scale_range
    if not 1.0 <= lo <= hi:
        raise AffineError(f"scale_range must satisfy 1 <= lo <= hi, got {scale_range}")
    h, w = shape
    scale = float(rng.uniform(lo, hi))
    theta = math.radians(float(rng.uniform(-max_rotation_deg, max_rotation_deg)))

    base = AffineParams.centered(shape, scale=scale, theta=theta)
    c = np.array(base.image_center)
    corners = np.array([[0.0, 0.0], [w - 1.0, 0.0], [0.0, h - 1.0], [w - 1.0, h - 1.0]])
    # source offsets of the output corners, before the crop shift
    v = ((corners - c) @ base.rotation2) / scale
    upper = np.array([w - 1.0, h - 1.0])
    u_lo = -c - v.min(axis=0)
    u_hi = (upper - c) - v.max(axis=0)

    u = np.zeros(2)
    draw = rng.uniform(0.0, 1.0, size=2)
    if np.all(u_hi >= u_lo):
        u = u_lo + draw * (u_hi - u_lo)
    p = c + base.rotation2 @ u
    return base.model_copy(update={"crop_x": float(p[0]), "crop_y": float(p[1])})
