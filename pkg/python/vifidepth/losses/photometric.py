"""Self-supervised photometric and smoothness losses with analytic gradients.

Every loss is computed by a small result object that keeps the intermediates
its backward pass needs. ``vjp`` methods take the cotangent of the output and
return the cotangent of the differentiable input. ``branch_state`` methods
return the discrete choices (argmin winners, signs, sampling cells, masks)
that make the loss piecewise smooth; a finite-difference check is only
meaningful where they are unchanged.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from vifidepth.geometry.camera import Intrinsics, Pose, ReprojectResult, reproject_map
from vifidepth.geometry.imgrid import (
    BoolArray,
    FloatArray,
    ImageGrid,
    IntArray,
    SampleResult,
    ValidityMask,
    bilinear_sample,
    box_filter,
    box_filter_adjoint,
    diff_x,
    diff_x_adjoint,
    diff_y,
    diff_y_adjoint,
    require_same_shape,
)


class PhotometricError(ValueError):
    """Raised on inconsistent photometric loss input."""


class PhotoConfig(BaseModel):
    """Photometric loss weights and SSIM constants."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(default=0.85, ge=0.0, le=1.0)
    gamma: float = Field(default=0.001, gt=0.0)
    ssim_window: int = Field(default=3, gt=0)
    c1: float = Field(default=1e-4, gt=0.0)
    c2: float = Field(default=9e-4, gt=0.0)

    @field_validator("ssim_window")
    @classmethod
    def _odd_window(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"ssim_window must be odd, got {value}")
        return value


# =========================
# SSIM
# =========================


@dataclass(frozen=True)
class SsimTerms:
    """Per-channel SSIM of ``x`` (reference) against ``y`` and its partials w.r.t. ``y``."""

    x: FloatArray
    y: FloatArray
    value: FloatArray
    d_mu_y: FloatArray
    d_m_yy: FloatArray
    d_m_xy: FloatArray
    window: int

    def vjp_y(self, g: FloatArray) -> FloatArray:
        """Cotangent ``(H, W, C)`` of the per-channel map, pulled back to ``y``."""
        bt = box_filter_adjoint
        w = self.window
        return bt(g * self.d_mu_y, w) + 2.0 * self.y * bt(g * self.d_m_yy, w) + self.x * bt(g * self.d_m_xy, w)


def ssim_terms(x: FloatArray, y: FloatArray, cfg: PhotoConfig) -> SsimTerms:
    w = cfg.ssim_window
    mu_x = box_filter(x, w)
    mu_y = box_filter(y, w)
    sigma_xx = box_filter(x * x, w) - mu_x * mu_x
    sigma_yy = box_filter(y * y, w) - mu_y * mu_y
    sigma_xy = box_filter(x * y, w) - mu_x * mu_y

    a1 = 2.0 * mu_x * mu_y + cfg.c1
    a2 = 2.0 * sigma_xy + cfg.c2
    b1 = mu_x * mu_x + mu_y * mu_y + cfg.c1
    b2 = sigma_xx + sigma_yy + cfg.c2
    den = b1 * b2
    s = (a1 * a2) / den

    d_mu_y = (2.0 * mu_x * a2 - 2.0 * mu_x * a1) / den - s * (2.0 * mu_y / b1 - 2.0 * mu_y / b2)
    d_m_yy = -s / b2
    d_m_xy = 2.0 * a1 / den
    return SsimTerms(x=x, y=y, value=s, d_mu_y=d_mu_y, d_m_yy=d_m_yy, d_m_xy=d_m_xy, window=w)


def ssim_map(I1: ImageGrid, I2: ImageGrid, cfg: PhotoConfig) -> ImageGrid:
    """Windowed SSIM, averaged over channels, as a 1-channel grid.

    Raises:
        PhotometricError: On shape mismatch.
    """
    _check_pair(I1, I2, "ssim_map")
    return ImageGrid(ssim_terms(I1.data, I2.data, cfg).value.mean(axis=-1))


def _check_pair(a: ImageGrid, b: ImageGrid, what: str) -> None:
    try:
        require_same_shape(a, b, what)
    except ValueError as e:
        raise PhotometricError(str(e)) from e


# =========================
# Photometric error
# =========================


@dataclass(frozen=True)
class PhotometricMap:
    """``(a/2)(1 - SSIM) + (1 - a) |I_t - I_rec|``, channel-averaged, with its adjoint."""

    error: FloatArray
    ssim: SsimTerms
    l1_sign: FloatArray
    alpha: float

    def vjp(self, g: FloatArray) -> FloatArray:
        """Pull a per-pixel cotangent ``(H, W)`` back to the reconstruction ``(H, W, C)``."""
        channels = self.l1_sign.shape[-1]
        gc = g[..., None] / channels
        return self.ssim.vjp_y(-0.5 * self.alpha * gc) + (1.0 - self.alpha) * gc * self.l1_sign


def photometric_map(I_t: ImageGrid, I_rec: ImageGrid, cfg: PhotoConfig) -> PhotometricMap:
    _check_pair(I_t, I_rec, "photometric_error")
    x, y = I_t.data, I_rec.data
    terms = ssim_terms(x, y, cfg)
    diff = y - x
    err = 0.5 * cfg.alpha * (1.0 - terms.value.mean(axis=-1)) + (1.0 - cfg.alpha) * np.abs(diff).mean(axis=-1)
    return PhotometricMap(error=err, ssim=terms, l1_sign=np.sign(diff), alpha=cfg.alpha)


def photometric_error(I_t: ImageGrid, I_rec: ImageGrid, cfg: PhotoConfig) -> ImageGrid:
    """Per-pixel SSIM + L1 error of a reconstruction against the target.

    Raises:
        PhotometricError: On shape mismatch.
    """
    return ImageGrid(photometric_map(I_t, I_rec, cfg).error)


# =========================
# Min reprojection and auto-masking
# =========================


@dataclass(frozen=True)
class MinReprojection:
    """Per-pixel minimum over valid reconstructions.

    Attributes:
        error: Minimum error, 0 where no reconstruction is valid.
        argmin: Index of the achieving reconstruction (lowest on ties).
        valid: ``True`` where at least one reconstruction is valid.
        best: Minimum error with ``+inf`` where nothing is valid.
    """

    error: FloatArray
    argmin: IntArray
    valid: BoolArray
    best: FloatArray


def _min_over(errors: Sequence[FloatArray], valids: Sequence[BoolArray]) -> MinReprojection:
    stack = np.stack([np.where(v, e, np.inf) for e, v in zip(errors, valids)])
    argmin = np.argmin(stack, axis=0)
    best = np.take_along_axis(stack, argmin[None], axis=0)[0]
    valid = np.isfinite(best)
    return MinReprojection(error=np.where(valid, best, 0.0), argmin=argmin, valid=valid, best=best)


def min_reprojection(
    I_t: ImageGrid,
    recs: Sequence[tuple[ImageGrid, ValidityMask]],
    cfg: PhotoConfig,
) -> tuple[ImageGrid, ValidityMask]:
    """Per-pixel minimum photometric error over the valid reconstructions.

    Raises:
        PhotometricError: If ``recs`` is empty or a shape differs.
    """
    if not recs:
        raise PhotometricError("min_reprojection needs at least one reconstruction")
    errors = [photometric_map(I_t, rec, cfg).error for rec, _ in recs]
    result = _min_over(errors, [mask.binary() for _, mask in recs])
    return ImageGrid(result.error), ValidityMask.from_bool(result.valid)


def identity_error(I_t: ImageGrid, sources: Sequence[ImageGrid], cfg: PhotoConfig) -> FloatArray:
    """Minimum error of the unwarped sources against the target."""
    return np.min(np.stack([photometric_map(I_t, s, cfg).error for s in sources]), axis=0)


def auto_mask(
    I_t: ImageGrid,
    sources: Sequence[ImageGrid],
    recs: Sequence[tuple[ImageGrid, ValidityMask]],
    cfg: PhotoConfig,
) -> ValidityMask:
    """1 where some valid reconstruction beats every unwarped source (strictly).

    Raises:
        PhotometricError: If the lists are empty or differ in length.
    """
    if not sources or len(sources) != len(recs):
        raise PhotometricError(f"auto_mask needs aligned non-empty lists, got {len(sources)} and {len(recs)}")
    errors = [photometric_map(I_t, rec, cfg).error for rec, _ in recs]
    best = _min_over(errors, [mask.binary() for _, mask in recs]).best
    return ValidityMask.from_bool(best < identity_error(I_t, sources, cfg))


# =========================
# Smoothness
# =========================


@dataclass(frozen=True)
class SmoothnessTerm:
    """Edge-aware smoothness of mean-normalized inverse depth."""

    value: float
    depth: FloatArray
    inv_depth: FloatArray
    mean_inv: float
    sign_x: FloatArray
    sign_y: FloatArray
    weight_x: FloatArray
    weight_y: FloatArray

    def vjp(self, g: float = 1.0) -> FloatArray:
        """Gradient of ``g * value`` w.r.t. depth ``(H, W)``."""
        n = self.depth.size
        g_star = diff_x_adjoint(g * self.sign_x * self.weight_x / n) + diff_y_adjoint(
            g * self.sign_y * self.weight_y / n
        )
        m = self.mean_inv
        g_inv = g_star / m - np.sum(g_star * self.inv_depth) / (m * m * n)
        return g_inv * (-1.0 / (self.depth * self.depth))

    def branch_state(self) -> tuple[FloatArray, ...]:
        return (self.sign_x, self.sign_y)


def smoothness_term(D: ImageGrid, I: ImageGrid) -> SmoothnessTerm:
    depth = D.plane()
    if D.shape != I.shape:
        raise PhotometricError(f"Depth shape {D.shape} does not match image shape {I.shape}")
    if np.any(depth <= 0.0):
        raise PhotometricError("smoothness_loss requires strictly positive depth")

    inv = 1.0 / depth
    mean_inv = float(np.mean(inv))
    norm = inv / mean_inv
    gx = diff_x(norm)
    gy = diff_y(norm)
    wx = np.exp(-np.abs(diff_x(I.data)).mean(axis=-1))
    wy = np.exp(-np.abs(diff_y(I.data)).mean(axis=-1))
    value = float(np.mean(np.abs(gx) * wx + np.abs(gy) * wy))
    return SmoothnessTerm(
        value=value,
        depth=depth,
        inv_depth=inv,
        mean_inv=mean_inv,
        sign_x=np.sign(gx),
        sign_y=np.sign(gy),
        weight_x=wx,
        weight_y=wy,
    )


def smoothness_loss(D: ImageGrid, I: ImageGrid) -> float:
    """Mean of ``|dx d*| e^{-|dx I|} + |dy d*| e^{-|dy I|}`` with ``d* = (1/D) / mean(1/D)``.

    Raises:
        PhotometricError: On non-positive depth or shape mismatch.
    """
    return smoothness_term(D, I).value


# =========================
# Self-supervised loss
# =========================


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    photometric: float
    smoothness: float
    masked_fraction: float


@dataclass(frozen=True)
class _SourceView:
    reprojection: ReprojectResult
    sample: SampleResult
    valid: BoolArray
    photo: PhotometricMap


@dataclass(frozen=True)
class SelfSupervisedResult:
    """Forward state of :func:`self_supervised_loss` and its backward pass."""

    breakdown: LossBreakdown
    views: tuple[_SourceView, ...]
    minimum: MinReprojection
    auto: BoolArray
    loss_mask: BoolArray
    smooth: SmoothnessTerm
    gamma: float

    def vjp(
        self, g: float = 1.0, g_smooth: Optional[float] = None
    ) -> tuple[FloatArray, list[tuple[FloatArray, FloatArray]]]:
        """Gradient of ``g * L_pe + g_smooth * gamma * L_sm`` w.r.t. depth and every source pose's ``(M, t)``.

        Args:
            g: Cotangent of the photometric part.
            g_smooth: Cotangent of the smoothness part; defaults to ``g``.

        Returns:
            ``(dL/dD (H, W), [(dL/dM, dL/dt) per source])``.
        """
        g_sm = g if g_smooth is None else g_smooth
        count = int(np.count_nonzero(self.loss_mask))
        d_depth = g_sm * self.gamma * self.smooth.vjp()
        pose_grads: list[tuple[FloatArray, FloatArray]] = []
        g_pe = np.where(self.loss_mask, g / count, 0.0) if count else np.zeros(self.loss_mask.shape)
        for index, view in enumerate(self.views):
            g_view = np.where(self.minimum.argmin == index, g_pe, 0.0)
            g_rec = view.photo.vjp(g_view)
            g_coords = view.sample.vjp_coords(g_rec)
            d_depth = d_depth + view.reprojection.vjp_depth(g_coords)
            pose_grads.append(view.reprojection.vjp_pose(g_coords))
        return d_depth, pose_grads

    def branch_state(self) -> tuple[FloatArray, ...]:
        state: list[FloatArray] = [self.minimum.argmin, self.auto, self.loss_mask]
        for view in self.views:
            state.extend([view.valid, view.photo.l1_sign, view.sample.cells()])
        state.extend(self.smooth.branch_state())
        return tuple(np.asarray(s) for s in state)


def self_supervised_loss(
    D_t: ImageGrid,
    poses: Sequence[Pose],
    I_t: ImageGrid,
    I_sources: Sequence[ImageGrid],
    K: Intrinsics,
    cfg: PhotoConfig,
    target_mask: Optional[ValidityMask] = None,
    auto_masking: bool = True,
) -> SelfSupervisedResult:
    """``mu * L_pe + gamma * L_sm`` for one target depth against its sources.

    Each source is warped into the target view through ``D_t`` and its pose.
    ``L_pe`` averages the min-reprojection error over pixels that pass the
    auto-mask, have a valid reconstruction and lie inside ``target_mask``.

    Raises:
        PhotometricError: On empty or misaligned source lists.
    """
    if not I_sources or len(poses) != len(I_sources):
        raise PhotometricError(f"Need one pose per source, got {len(poses)} poses and {len(I_sources)} sources")

    views: list[_SourceView] = []
    for pose, source in zip(poses, I_sources):
        _check_pair(I_t, source, "self_supervised_loss")
        rp = reproject_map(D_t, pose, K)
        sample = bilinear_sample(source, rp.coords)
        valid = rp.mask.binary() & sample.mask.binary()
        views.append(_SourceView(rp, sample, valid, photometric_map(I_t, sample.image, cfg)))

    minimum = _min_over([v.photo.error for v in views], [v.valid for v in views])
    if auto_masking:
        auto = minimum.best < identity_error(I_t, I_sources, cfg)
    else:
        auto = np.ones(D_t.shape, dtype=bool)

    loss_mask = auto & minimum.valid
    if target_mask is not None:
        loss_mask &= target_mask.binary()

    count = int(np.count_nonzero(loss_mask))
    pe = float(np.sum(minimum.error[loss_mask]) / count) if count else 0.0
    smooth = smoothness_term(D_t, I_t)
    breakdown = LossBreakdown(
        total=pe + cfg.gamma * smooth.value,
        photometric=pe,
        smoothness=smooth.value,
        masked_fraction=1.0 - count / loss_mask.size,
    )
    return SelfSupervisedResult(
        breakdown=breakdown,
        views=tuple(views),
        minimum=minimum,
        auto=auto,
        loss_mask=loss_mask,
        smooth=smooth,
        gamma=cfg.gamma,
    )
