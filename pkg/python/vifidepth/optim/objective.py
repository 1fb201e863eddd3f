"""Full training objective over the three target positions and its exact gradient.

For each target position the objective adds the self-supervised losses of
the single-frame, multi-frame and augmented-view depths and the weighted
triplet consistency. Gradients are assembled in reverse order from the
analytic vector-Jacobian products of the loss, affine, camera and sampling
modules.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from vifidepth.geometry.affine import (
    AffineParams,
    affine_image,
    affine_inverse_depth,
    rectification_matrix,
    rectified_pose_vjp,
    rectify_pose,
)
from vifidepth.geometry.camera import Pose, pose_from_params, pose_params_vjp
from vifidepth.geometry.imgrid import FloatArray, ImageGrid
from vifidepth.losses.consistency import (
    ConsistencyConfig,
    TripletLosses,
    total_objective,
    triplet_consistency,
)
from vifidepth.losses.photometric import PhotoConfig, SelfSupervisedResult, self_supervised_loss
from vifidepth.optim.params import (
    DepthParam,
    ObjectiveGradient,
    ObjectiveParams,
    OptimError,
    decode_depth,
    depth_derivative,
)
from vifidepth.scene.bundle import TripletBundle

TARGETS: tuple[int, ...] = (-1, 0, 1)
SOURCES: tuple[int, ...] = (-2, 2)


class LossWeights(BaseModel):
    """Term toggles; ``lambda`` and ``gamma`` live in the consistency and photometric configs."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    photometric: bool = True
    smoothness: bool = True
    multi_frame: bool = True
    augmented: bool = True
    svdc: bool = True
    sadc: bool = True
    auto_masking: bool = True


@dataclass(frozen=True)
class PositionTerms:
    """Loss components of one target position with the raw photometric and smoothness parts."""

    losses: TripletLosses
    photometric: float
    smoothness: float


@dataclass(frozen=True)
class ObjectiveResult:
    total: float
    positions: dict[int, PositionTerms]
    gradient: ObjectiveGradient
    branch: tuple[FloatArray, ...]


def _weighted(ss: Optional[SelfSupervisedResult], weights: LossWeights, gamma: float) -> float:
    if ss is None:
        return 0.0
    b = ss.breakdown
    return (b.photometric if weights.photometric else 0.0) + (gamma * b.smoothness if weights.smoothness else 0.0)


def _ss_vjp(
    ss: SelfSupervisedResult, weights: LossWeights
) -> tuple[FloatArray, list[tuple[FloatArray, FloatArray]]]:
    return ss.vjp(1.0 if weights.photometric else 0.0, 1.0 if weights.smoothness else 0.0)


def _relative_poses(
    params: ObjectiveParams, bundle: TripletBundle, target: int
) -> list[Pose]:
    poses: list[Pose] = []
    for source in SOURCES:
        key = (target, source)
        if key in params.poses:
            poses.append(pose_from_params(params.poses[key]))
        else:
            poses.append(bundle.relative_pose(target, source))
    return poses


def objective_and_gradient(
    params: ObjectiveParams,
    bundle: TripletBundle,
    aug: AffineParams,
    weights: Optional[LossWeights] = None,
    photo: Optional[PhotoConfig] = None,
    consistency: Optional[ConsistencyConfig] = None,
) -> ObjectiveResult:
    """Evaluate ``L = L(t-1) + L(t) + L(t+1)`` and its gradient.

    ``L(tau) = L_ss + L_ss^m + L~_ss + lambda L_tc``. Positions are the keys
    of ``params.depth``; multi-frame and augmented terms exist for the
    positions present in ``params.multi`` and ``params.augmented``. Poses
    with an entry in ``params.poses`` are optimized, the rest come from the
    bundle. Sources are the frames at ``t - 2`` and ``t + 2``.

    Raises:
        OptimError: If a position is unknown or an augmented depth is given
            for a position without a single-frame depth.
    """
    weights = weights if weights is not None else LossWeights()
    photo = photo if photo is not None else PhotoConfig()
    consistency = consistency if consistency is not None else ConsistencyConfig()

    unknown = set(params.depth) - set(TARGETS)
    if unknown:
        raise OptimError(f"Target positions must be in {TARGETS}, got {sorted(unknown)}")
    orphan = (set(params.multi) | set(params.augmented)) - set(params.depth)
    if orphan:
        raise OptimError(f"Multi-frame or augmented depth without a target depth at {sorted(orphan)}")

    K = bundle.K
    sources = [bundle.images[s] for s in SOURCES]
    lam = consistency.lambda_

    R_c = rectification_matrix(K, aug) if params.augmented and weights.augmented else None
    aug_sources = [affine_image(img, aug).grid for img in sources] if R_c is not None else []

    positions: dict[int, PositionTerms] = {}
    grad_depth: dict[int, FloatArray] = {}
    grad_multi: dict[int, FloatArray] = {}
    grad_aug: dict[int, FloatArray] = {}
    pose_cot: dict[tuple[int, int], tuple[FloatArray, FloatArray]] = {}
    branch: list[FloatArray] = []

    def add_pose(key: tuple[int, int], dM: FloatArray, dt: FloatArray) -> None:
        if key in pose_cot:
            old_M, old_t = pose_cot[key]
            pose_cot[key] = (old_M + dM, old_t + dt)
        else:
            pose_cot[key] = (dM, dt)

    for target in sorted(params.depth):
        image = bundle.images[target]
        poses = _relative_poses(params, bundle, target)
        D = decode_depth(params.depth[target])
        ss = self_supervised_loss(D, poses, image, sources, K, photo, auto_masking=weights.auto_masking)

        multi_param: Optional[DepthParam] = params.multi.get(target) if weights.multi_frame else None
        D_m: Optional[ImageGrid] = None
        ss_m: Optional[SelfSupervisedResult] = None
        if multi_param is not None:
            D_m = decode_depth(multi_param)
            ss_m = self_supervised_loss(D_m, poses, image, sources, K, photo, auto_masking=weights.auto_masking)

        aug_param: Optional[DepthParam] = params.augmented.get(target) if R_c is not None else None
        ss_a: Optional[SelfSupervisedResult] = None
        restore = None
        if aug_param is not None and R_c is not None:
            D_tilde = decode_depth(aug_param)
            target_aug = affine_image(image, aug)
            rectified = [rectify_pose(T, R_c) for T in poses]
            ss_a = self_supervised_loss(
                D_tilde,
                rectified,
                target_aug.grid,
                aug_sources,
                K,
                photo,
                target_mask=target_aug.mask,
                auto_masking=weights.auto_masking,
            )
            restore = affine_inverse_depth(D_tilde, aug)

        tc = triplet_consistency(
            D,
            D_m,
            restore.grid if restore is not None else None,
            aug.scale,
            restore.mask if restore is not None else None,
            consistency,
            use_svdc=weights.svdc,
            use_sadc=weights.sadc,
        )
        losses = tc.losses(
            _weighted(ss, weights, photo.gamma),
            _weighted(ss_m, weights, photo.gamma),
            _weighted(ss_a, weights, photo.gamma),
            lam,
        )
        terms = [t for t in (ss, ss_m, ss_a) if t is not None]
        positions[target] = PositionTerms(
            losses=losses,
            photometric=sum(t.breakdown.photometric for t in terms) if weights.photometric else 0.0,
            smoothness=sum(t.breakdown.smoothness for t in terms) if weights.smoothness else 0.0,
        )

        # reverse pass
        d_D, pose_grads = _ss_vjp(ss, weights)
        grad_depth[target] = (d_D + lam * tc.grad_depth) * depth_derivative(params.depth[target])
        for source, (dM, dt) in zip(SOURCES, pose_grads):
            add_pose((target, source), dM, dt)
        branch.extend(ss.branch_state())

        if ss_m is not None and multi_param is not None:
            d_Dm, pose_grads_m = _ss_vjp(ss_m, weights)
            grad_multi[target] = (d_Dm + lam * tc.grad_multi) * depth_derivative(multi_param)
            for source, (dM, dt) in zip(SOURCES, pose_grads_m):
                add_pose((target, source), dM, dt)
            branch.extend(ss_m.branch_state())

        if ss_a is not None and restore is not None and aug_param is not None and R_c is not None:
            d_Dt, pose_grads_a = _ss_vjp(ss_a, weights)
            d_restored = restore.sample.vjp_grid(lam * tc.grad_restored[..., None])[..., 0]
            grad_aug[target] = (d_Dt + d_restored) * depth_derivative(aug_param)
            for source, (dM, dt) in zip(SOURCES, pose_grads_a):
                add_pose((target, source), *rectified_pose_vjp(R_c, dM, dt))
            branch.extend(ss_a.branch_state())

    pose_grad = {
        key: pose_params_vjp(p, *pose_cot[key]) if key in pose_cot else np.zeros(6)
        for key, p in params.poses.items()
    }
    # disabled multi-frame or augmented terms leave their parameters flat
    for key in params.multi:
        grad_multi.setdefault(key, np.zeros(params.multi[key].shape))
    for key in params.augmented:
        grad_aug.setdefault(key, np.zeros(params.augmented[key].shape))

    return ObjectiveResult(
        total=total_objective(positions[k].losses for k in sorted(positions)),
        positions=positions,
        gradient=ObjectiveGradient(depth=grad_depth, multi=grad_multi, augmented=grad_aug, poses=pose_grad),
        branch=tuple(branch),
    )


def summarize(positions: dict[int, PositionTerms]) -> dict[str, float]:
    """Per-iteration summary summed over positions in a fixed order."""
    ordered: Sequence[PositionTerms] = [positions[k] for k in sorted(positions)]
    out = {"total": 0.0, "pe": 0.0, "sm": 0.0, "sv": 0.0, "sa": 0.0, "sa_m": 0.0}
    for terms in ordered:
        out["total"] += terms.losses.total
        out["pe"] += terms.photometric
        out["sm"] += terms.smoothness
        out["sv"] += terms.losses.l_sv
        out["sa"] += terms.losses.l_sa
        out["sa_m"] += terms.losses.l_sa_m
    return out
