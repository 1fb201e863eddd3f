"""Heavy-ball gradient descent on the depth (and optionally pose) parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vifidepth.evaluation.metrics import depth_metrics
from vifidepth.geometry.affine import AffineParams, affine_image
from vifidepth.geometry.camera import CameraError, PoseParams
from vifidepth.geometry.imgrid import FloatArray, GridError, ImageGrid
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory
from vifidepth.losses.consistency import ConsistencyConfig, ConsistencyError
from vifidepth.losses.photometric import PhotoConfig
from vifidepth.optim.objective import SOURCES, TARGETS, LossWeights, objective_and_gradient, summarize
from vifidepth.optim.params import (
    DepthParam,
    ObjectiveParams,
    OptimError,
    ParamLayout,
    decode_depth,
    sigma_from_depth,
)
from vifidepth.scene.bundle import TripletBundle

logger = VifiDepthLoggerFactory.get_logger(__name__)

SIGMA_CLIP = (1e-6, 1.0 - 1e-6)

# raised by a step that leaves the parameter domain
INVALID_STEP = (CameraError, ConsistencyError, GridError, OptimError)


class OptimConfig(BaseModel):
    """Descent schedule, divergence rule and the loss configuration."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_iters: int = Field(default=2000, gt=0)
    step_size: float = Field(default=0.05, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    optimize_pose: bool = False
    log_every: int = Field(default=100, gt=0)
    divergence_factor: float = Field(default=10.0, gt=1.0)
    divergence_patience: int = Field(default=50, gt=0)
    loss_weights: LossWeights = LossWeights()
    photo: PhotoConfig = PhotoConfig()
    consistency: ConsistencyConfig = ConsistencyConfig()


class OptimStatus(StrEnum):
    COMPLETED = "completed"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class LossRecord:
    """One row of the loss curve, summed over target positions."""

    iteration: int
    total: float
    pe: float
    sm: float
    sv: float
    sa: float
    sa_m: float


@dataclass(frozen=True)
class OptimizeResult:
    """Final state of a run.

    Attributes:
        depths: Decoded single-frame depth per target position.
        loss_curve: One record per evaluated iterate, starting at the
            initial parameters.
        metrics_trace: ``(iteration, median-scaled Abs Rel of D_t)`` every
            ``log_every`` iterations.
    """

    status: OptimStatus
    params: ObjectiveParams
    depths: dict[int, ImageGrid]
    loss_curve: list[LossRecord]
    metrics_trace: list[tuple[int, float]] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.loss_curve) - 1


def initial_params(
    bundle: TripletBundle,
    depth: Optional[float] = None,
    multi: bool = True,
    augmented: bool = True,
    aug: Optional[AffineParams] = None,
    optimize_pose: bool = False,
    ground_truth: bool = False,
    multi_depth: Optional[float] = None,
    targets: tuple[int, ...] = TARGETS,
) -> ObjectiveParams:
    """Starting point for :func:`optimize`.

    Args:
        depth: Constant initial depth; defaults to the median ground-truth
            depth of ``t``.
        multi: Add a multi-frame depth for ``t``.
        augmented: Add an augmented-view depth per position.
        aug: Augmentation used to place augmented depths at ground truth.
        optimize_pose: Add pose parameters initialized from the bundle.
        ground_truth: Start at the bundle's depths instead of a constant.
        multi_depth: Constant initial multi-frame depth; defaults to ``depth``.
        targets: Target positions to estimate. The multi-frame depth needs
            ``t`` among them.

    Raises:
        OptimError: If ``targets`` is empty or not a subset of the three
            target positions.
    """
    if not targets or not set(targets) <= set(TARGETS):
        raise OptimError(f"targets must be a non-empty subset of {TARGETS}, got {targets}")
    targets = tuple(sorted(set(targets)))
    shape = bundle.shape
    if depth is None:
        depth = float(np.median(bundle.depths[0].plane()))

    def start(target: int) -> DepthParam:
        return sigma_from_depth(bundle.depths[target]) if ground_truth else DepthParam.constant(shape, depth)

    def start_multi() -> DepthParam:
        if ground_truth or multi_depth is None:
            return start(0)
        return DepthParam.constant(shape, multi_depth)

    def start_aug(target: int) -> DepthParam:
        if ground_truth and aug is not None:
            warped = affine_image(bundle.depths[target], aug).grid
            return sigma_from_depth(ImageGrid(warped.data / aug.scale))
        return DepthParam.constant(shape, depth)

    poses = {}
    if optimize_pose:
        poses = {(t, s): PoseParams.from_pose(bundle.relative_pose(t, s)) for t in targets for s in SOURCES}
    return ObjectiveParams(
        depth={t: start(t) for t in targets},
        multi={0: start_multi()} if multi and 0 in targets else {},
        augmented={t: start_aug(t) for t in targets} if augmented else {},
        poses=poses,
    )


def _record(iteration: int, summary: dict[str, float]) -> LossRecord:
    return LossRecord(iteration=iteration, **summary)


def optimize(
    bundle: TripletBundle,
    init: ObjectiveParams,
    cfg: OptimConfig,
    aug: Optional[AffineParams] = None,
) -> OptimizeResult:
    """Minimize the objective with fixed-step heavy-ball descent.

    ``v <- momentum v - step grad``, ``x <- x + v``, after which sigma entries
    are clipped into ``(0, 1)``. A run that stays above ``divergence_factor``
    times the initial loss for ``divergence_patience`` consecutive iterations
    stops with :attr:`OptimStatus.DIVERGED` and returns its last iterate. So
    does a step whose loss is not finite or that leaves the parameter domain
    (an axis-angle of norm pi or more, a non-finite entry); the step is then
    discarded and the previous iterate returned.
    """
    aug = aug if aug is not None else AffineParams.identity(bundle.shape)
    layout = ParamLayout.of(init)
    sigma_mask = layout.sigma_mask().astype(bool)
    x = layout.flatten(init)
    velocity = np.zeros_like(x)

    def evaluate(vector: FloatArray) -> tuple[dict[str, float], FloatArray]:
        result = objective_and_gradient(
            layout.unflatten(vector), bundle, aug, cfg.loss_weights, cfg.photo, cfg.consistency
        )
        return summarize(result.positions), layout.flatten_gradient(result.gradient)

    traced = min(init.depth, key=abs)

    def trace(vector: FloatArray, iteration: int, trace_out: list[tuple[int, float]]) -> None:
        depth = decode_depth(layout.unflatten(vector).depth[traced])
        gt = bundle.depths[traced]
        trace_out.append((iteration, depth_metrics(depth, gt, median_scaled=True).abs_rel))

    summary, grad = evaluate(x)
    initial = summary["total"]
    curve = [_record(0, summary)]
    metrics_trace: list[tuple[int, float]] = []
    trace(x, 0, metrics_trace)
    status = OptimStatus.COMPLETED
    above = 0

    logger.info("optimize: %d parameters, initial loss %.6g", layout.size, initial)
    for iteration in range(1, cfg.max_iters + 1):
        velocity = cfg.momentum * velocity - cfg.step_size * grad
        step = x + velocity
        step[sigma_mask] = np.clip(step[sigma_mask], *SIGMA_CLIP)

        try:
            summary, step_grad = evaluate(step)
        except INVALID_STEP as e:
            status = OptimStatus.DIVERGED
            logger.warning("optimize: invalid step at iteration %d: %s", iteration, e)
            break
        total = summary["total"]
        if not np.isfinite(total):
            status = OptimStatus.DIVERGED
            logger.warning("optimize: non-finite loss at iteration %d", iteration)
            break
        x, grad = step, step_grad
        curve.append(_record(iteration, summary))
        above = above + 1 if total > cfg.divergence_factor * max(initial, 1e-12) else 0
        if above >= cfg.divergence_patience:
            status = OptimStatus.DIVERGED
            logger.warning(
                "optimize: loss above %.1fx initial for %d iterations, stopping at %d",
                cfg.divergence_factor,
                above,
                iteration,
            )
            break
        if iteration % cfg.log_every == 0:
            trace(x, iteration, metrics_trace)
            logger.info(
                "iter %d total %.6g pe %.6g sm %.6g sv %.6g sa %.6g sa_m %.6g",
                iteration,
                total,
                summary["pe"],
                summary["sm"],
                summary["sv"],
                summary["sa"],
                summary["sa_m"],
            )

    final = layout.unflatten(x)
    return OptimizeResult(
        status=status,
        params=final,
        depths={t: decode_depth(p) for t, p in final.depth.items()},
        loss_curve=curve,
        metrics_trace=metrics_trace,
    )
