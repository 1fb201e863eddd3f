"""Pinhole projection, backprojection and rigid pose algebra.

``T_{t->s}`` maps points from the target camera frame into the source camera
frame: ``P_s = R P_t + t``. A reprojection therefore tells, for each target
pixel, where to sample the source image.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.transform import Rotation

from vifidepth.geometry.imgrid import BoolArray, FloatArray, ImageGrid, ValidityMask, pixel_lattice

# Transformed points at or below this Z are treated as not visible.
MIN_VISIBLE_Z = 1e-6

ORTHONORMAL_TOL = 1e-9

_SMALL_ANGLE = 1e-5


class CameraError(ValueError):
    """Raised on invalid camera or pose input."""


class BehindCameraError(CameraError):
    """Raised when projecting a point with non-positive depth."""


# =========================
# Types
# =========================


class Intrinsics(BaseModel):
    """Pinhole intrinsics ``K = [[fx, 0, cx], [0, fy, cy], [0, 0, 1]]``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    fx: float = Field(gt=0.0)
    fy: float = Field(gt=0.0)
    cx: float
    cy: float

    @classmethod
    def for_shape(cls, height: int, width: int, focal_ratio: float = 0.9) -> Intrinsics:
        """Square-pixel intrinsics with focal ``focal_ratio * width`` and a centered principal point."""
        focal = focal_ratio * width
        return cls(fx=focal, fy=focal, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0)

    @property
    def matrix(self) -> FloatArray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def rescaled(self, shape: tuple[int, int], new_shape: tuple[int, int]) -> Intrinsics:
        """Intrinsics of the same camera resampled from ``shape`` to ``new_shape`` (pixel-center aligned)."""
        (h, w), (nh, nw) = shape, new_shape
        sx, sy = nw / w, nh / h
        return Intrinsics(
            fx=self.fx * sx,
            fy=self.fy * sy,
            cx=(self.cx + 0.5) * sx - 0.5,
            cy=(self.cy + 0.5) * sy - 0.5,
        )

    @property
    def inverse(self) -> FloatArray:
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )


def _vector3(value: FloatArray, what: str) -> FloatArray:
    arr = np.array(value, dtype=np.float64).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise CameraError(f"{what} must be a finite 3-vector, got {value!r}")
    arr.setflags(write=False)
    return arr


def _matrix3(value: FloatArray, what: str) -> FloatArray:
    arr = np.array(value, dtype=np.float64)
    if arr.shape != (3, 3) or not np.all(np.isfinite(arr)):
        raise CameraError(f"{what} must be a finite 3x3 matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PoseSE3:
    """Rigid transform ``P -> R P + t`` with an orthonormal ``R``."""

    rotation: FloatArray
    translation: FloatArray

    def __post_init__(self) -> None:
        rot = _matrix3(self.rotation, "rotation")
        err = np.max(np.abs(rot.T @ rot - np.eye(3)))
        det = float(np.linalg.det(rot))
        if err >= ORTHONORMAL_TOL or abs(det - 1.0) >= ORTHONORMAL_TOL:
            raise CameraError(f"rotation is not orthonormal (|R^T R - I| = {err:.3e}, det = {det:.12f})")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", _vector3(self.translation, "translation"))

    @classmethod
    def identity(cls) -> PoseSE3:
        return cls(np.eye(3), np.zeros(3))

    @property
    def linear(self) -> FloatArray:
        return self.rotation


@dataclass(frozen=True)
class LinearPose:
    """General linear transform ``P -> M P + t``.

    Rectified poses conjugate a rotation with a non-orthogonal matrix, so they
    leave SE(3) and are stored in this form.
    """

    matrix: FloatArray
    translation: FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _matrix3(self.matrix, "matrix"))
        object.__setattr__(self, "translation", _vector3(self.translation, "translation"))

    @property
    def linear(self) -> FloatArray:
        return self.matrix


Pose = Union[PoseSE3, LinearPose]


@dataclass(frozen=True)
class PoseParams:
    """Axis-angle rotation and translation, the optimizer's pose coordinates."""

    axis_angle: FloatArray
    translation: FloatArray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        omega = _vector3(self.axis_angle, "axis_angle")
        if np.linalg.norm(omega) >= np.pi:
            raise CameraError(f"axis_angle norm must be below pi, got {np.linalg.norm(omega):.6f}")
        object.__setattr__(self, "axis_angle", omega)
        object.__setattr__(self, "translation", _vector3(self.translation, "translation"))

    @classmethod
    def zero(cls) -> PoseParams:
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_pose(cls, pose: PoseSE3) -> PoseParams:
        """Principal-branch parameters of an SE(3) pose."""
        return cls(Rotation.from_matrix(np.array(pose.rotation)).as_rotvec(), pose.translation)

    def as_vector(self) -> FloatArray:
        return np.concatenate([self.axis_angle, self.translation])

    @classmethod
    def from_vector(cls, vec: FloatArray) -> PoseParams:
        return cls(vec[:3], vec[3:6])


# =========================
# Point operations
# =========================


def project(point: FloatArray, K: Intrinsics) -> tuple[float, float]:
    """Project a camera-frame point to pixel coordinates.

    Raises:
        BehindCameraError: If the point's Z is not positive.
    """
    X, Y, Z = (float(v) for v in np.asarray(point, dtype=np.float64).reshape(3))
    if not Z > 0.0:
        raise BehindCameraError(f"Cannot project point with Z = {Z}")
    return (K.fx * X / Z + K.cx, K.fy * Y / Z + K.cy)


def project_points(points: FloatArray, K: Intrinsics) -> FloatArray:
    """Vectorized projection of ``(..., 3)`` points; the caller guarantees ``Z > 0``."""
    z = points[..., 2]
    return np.stack([K.fx * points[..., 0] / z + K.cx, K.fy * points[..., 1] / z + K.cy], axis=-1)


def backproject(pixel: tuple[float, float], depth: float, K: Intrinsics) -> FloatArray:
    """Lift a pixel at ``depth`` meters to the camera frame: ``D K^-1 [x, y, 1]``.

    Raises:
        CameraError: If ``depth`` is not positive.
    """
    if not depth > 0.0:
        raise CameraError(f"depth must be positive, got {depth}")
    x, y = pixel
    return np.array([depth * (x - K.cx) / K.fx, depth * (y - K.cy) / K.fy, depth])


def pixel_rays(height: int, width: int, K: Intrinsics) -> FloatArray:
    """``K^-1 [x, y, 1]`` for every pixel, shape ``(H, W, 3)``."""
    lattice = pixel_lattice(height, width)
    return np.stack(
        [(lattice[..., 0] - K.cx) / K.fx, (lattice[..., 1] - K.cy) / K.fy, np.ones((height, width))],
        axis=-1,
    )


def transform_point(T: Pose, P: FloatArray) -> FloatArray:
    """``M P + t`` for one point or an ``(..., 3)`` array of points."""
    return np.asarray(P, dtype=np.float64) @ T.linear.T + T.translation


# =========================
# Pose algebra
# =========================


def pose_compose(A: PoseSE3, B: PoseSE3) -> PoseSE3:
    """``A o B``: apply ``B`` first, then ``A``."""
    return PoseSE3(A.rotation @ B.rotation, A.rotation @ B.translation + A.translation)


def pose_inverse(T: PoseSE3) -> PoseSE3:
    rt = T.rotation.T
    return PoseSE3(rt, -rt @ T.translation)


def skew(v: FloatArray) -> FloatArray:
    """Cross-product matrix ``[v]x`` with ``[v]x w = v x w``."""
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def rotation_from_axis_angle(omega: FloatArray) -> FloatArray:
    # scipy rejects read-only buffers
    return np.asarray(Rotation.from_rotvec(np.array(omega, dtype=np.float64)).as_matrix(), dtype=np.float64)


def pose_from_params(p: PoseParams) -> PoseSE3:
    """Rodrigues rotation plus translation."""
    return PoseSE3(rotation_from_axis_angle(p.axis_angle), p.translation)


def rotation_jacobian(omega: FloatArray) -> FloatArray:
    """Derivatives ``dR/d omega_i`` of the Rodrigues map, shape ``(3, 3, 3)`` indexed ``[i]``.

    Uses ``dR/dw_i = (w_i [w]x + [w x ((I - R) e_i)]x) R / |w|^2`` and a second
    order expansion around zero.
    """
    omega = np.asarray(omega, dtype=np.float64)
    theta = float(np.linalg.norm(omega))
    basis = np.eye(3)
    if theta < _SMALL_ANGLE:
        w = skew(omega)
        return np.stack([skew(e) + 0.5 * (skew(e) @ w + w @ skew(e)) for e in basis])

    R = rotation_from_axis_angle(omega)
    w = skew(omega)
    eye_minus_r = np.eye(3) - R
    return np.stack(
        [(omega[i] * w + skew(np.cross(omega, eye_minus_r @ basis[i]))) @ R / theta**2 for i in range(3)]
    )


def pose_params_vjp(p: PoseParams, d_linear: FloatArray, d_translation: FloatArray) -> FloatArray:
    """Pull cotangents of ``(R, t)`` back to the 6-vector ``(axis_angle, translation)``."""
    jac = rotation_jacobian(p.axis_angle)
    d_omega = np.einsum("ijk,jk->i", jac, d_linear)
    return np.concatenate([d_omega, np.asarray(d_translation, dtype=np.float64)])


# =========================
# Dense reprojection
# =========================


@dataclass(frozen=True)
class ReprojectResult:
    """Per-pixel source coordinates of a target depth map under a pose.

    Attributes:
        coords: ``(H, W, 2)`` source pixel positions; ``(-1, -1)`` where invalid.
        mask: 1 where the transformed point lies in front of the source camera.
        points: Target-frame points ``P = D K^-1 p``.
        transformed: Source-frame points ``Q = M P + t``.
        rays: ``K^-1 p`` per pixel.
    """

    coords: FloatArray
    mask: ValidityMask
    points: FloatArray
    transformed: FloatArray
    rays: FloatArray
    linear: FloatArray
    K: Intrinsics

    @property
    def visible(self) -> BoolArray:
        return self.mask.values > 0.5

    def _projection_jacobian(self) -> FloatArray:
        """``du/dQ`` per pixel, ``(H, W, 2, 3)``, zero on invisible pixels."""
        Q = self.transformed
        vis = self.visible
        z = np.where(vis, Q[..., 2], 1.0)
        jac = np.zeros(Q.shape[:2] + (2, 3))
        jac[..., 0, 0] = self.K.fx / z
        jac[..., 0, 2] = -self.K.fx * Q[..., 0] / z**2
        jac[..., 1, 1] = self.K.fy / z
        jac[..., 1, 2] = -self.K.fy * Q[..., 1] / z**2
        jac[~vis] = 0.0
        return jac

    def d_coords_d_depth(self) -> FloatArray:
        """``d coords / d D`` per pixel, ``(H, W, 2)``."""
        dq = self.rays @ self.linear.T
        return np.einsum("hwij,hwj->hwi", self._projection_jacobian(), dq)

    def _point_cotangent(self, g: FloatArray) -> FloatArray:
        return np.einsum("hwij,hwi->hwj", self._projection_jacobian(), g)

    def vjp_depth(self, g: FloatArray) -> FloatArray:
        """Pull a coordinate cotangent ``(H, W, 2)`` back to depth ``(H, W)``."""
        return np.sum(g * self.d_coords_d_depth(), axis=-1)

    def vjp_pose(self, g: FloatArray) -> tuple[FloatArray, FloatArray]:
        """Pull a coordinate cotangent back to the pose's ``(M, t)``."""
        gq = self._point_cotangent(g).reshape(-1, 3)
        P = self.points.reshape(-1, 3)
        return gq.T @ P, gq.sum(axis=0)


def reproject_map(D_t: ImageGrid, T: Pose, K: Intrinsics) -> ReprojectResult:
    """Where each target pixel lands in the source view.

    Args:
        D_t: Target depth, 1 channel, strictly positive.
        T: Target-to-source pose (rigid or general linear).
        K: Shared intrinsics.

    Returns:
        Source coordinates, visibility and the cached geometry for adjoints.

    Raises:
        CameraError: If the depth has more than one channel or a
            non-positive value.
    """
    depth = D_t.plane()
    if np.any(depth <= 0.0):
        raise CameraError("reproject_map requires strictly positive depth")

    rays = pixel_rays(D_t.height, D_t.width, K)
    points = rays * depth[..., None]
    transformed = transform_point(T, points)
    visible = transformed[..., 2] > MIN_VISIBLE_Z

    safe = np.where(visible[..., None], transformed, np.array([0.0, 0.0, 1.0]))
    coords = np.where(visible[..., None], project_points(safe, K), -1.0)

    return ReprojectResult(
        coords=coords,
        mask=ValidityMask.from_bool(visible),
        points=points,
        transformed=transformed,
        rays=rays,
        linear=np.array(T.linear),
        K=K,
    )
