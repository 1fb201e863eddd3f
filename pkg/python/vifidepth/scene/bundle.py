"""Training bundles: everything one target position needs, rendered from a scene."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from vifidepth.fusion.interpolation import FlowField, MergeMask, synthesize_intermediate
from vifidepth.geometry.camera import Intrinsics, PoseSE3
from vifidepth.geometry.imgrid import FloatArray, ImageGrid, ValidityMask
from vifidepth.libs.core.formats.ppm import quantize
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory, VifiDepth_trace
from vifidepth.scene.trajectory import POSITIONS, Trajectory
from vifidepth.scene.world import Scene, ground_truth_flow, render_view

logger = VifiDepthLoggerFactory.get_logger(__name__)

TemporalSource = Literal["rendered", "interpolated"]

# Middle position -> (previous, next) neighbours it is interpolated from.
INTERMEDIATES: dict[int, tuple[int, int]] = {-1: (-2, 0), 0: (-2, 2), 1: (0, 2)}


def merge_mask_from_occlusion(occluded_prev: ValidityMask, occluded_next: ValidityMask) -> MergeMask:
    """1 where only the next view is occluded, 0 where only the previous one is, 0.5 elsewhere."""
    prev = occluded_prev.binary(0.5)
    nxt = occluded_next.binary(0.5)
    mask = np.full(prev.shape, 0.5)
    mask[nxt & ~prev] = 1.0
    mask[prev & ~nxt] = 0.0
    return MergeMask.from_array(mask)


@dataclass(frozen=True)
class TripletBundle:
    """Rendered frames and oracle geometry for positions ``t-2 .. t+2``.

    Attributes:
        flows: ``(a, b)`` -> flow from view ``a`` to view ``b`` for every
            middle position and its two neighbours.
        occlusions: Same keys; 1 where ``a``'s pixel is not visible in ``b``.
        merge_masks: Middle position -> VFI merge mask over its neighbours.
        temporal: Whether frames at ``t +- 1`` were rendered or interpolated.
    """

    images: dict[int, ImageGrid]
    depths: dict[int, ImageGrid]
    trajectory: Trajectory
    K: Intrinsics
    flows: dict[tuple[int, int], FlowField]
    occlusions: dict[tuple[int, int], ValidityMask]
    merge_masks: dict[int, MergeMask]
    temporal: TemporalSource

    @property
    def shape(self) -> tuple[int, int]:
        return self.images[0].shape

    def relative_pose(self, target: int, source: int) -> PoseSE3:
        return self.trajectory.relative(target, source)


@VifiDepth_trace(debug_only=True)
def make_triplet(
    scene: Scene,
    trajectory: Trajectory,
    K: Intrinsics,
    shape: tuple[int, int],
    temporal: TemporalSource = "rendered",
    jobs: int = 1,
) -> TripletBundle:
    """Render all five frames with ground-truth depth, flows and merge masks.

    With ``temporal="interpolated"`` the frames at ``t +- 1`` are replaced by
    flow-based interpolations of their neighbours, as a frame interpolator
    would produce them. Depths stay rendered.
    """
    views = {k: render_view(scene, trajectory.pose(k), K, shape, jobs) for k in POSITIONS}
    images = {k: v.image for k, v in views.items()}
    depths = {k: v.depth for k, v in views.items()}

    flows: dict[tuple[int, int], FlowField] = {}
    occlusions: dict[tuple[int, int], ValidityMask] = {}
    merge_masks: dict[int, MergeMask] = {}
    for middle, (prev, nxt) in INTERMEDIATES.items():
        for other in (prev, nxt):
            flow, occ = ground_truth_flow(scene, trajectory.pose(middle), trajectory.pose(other), K, shape, jobs)
            flows[(middle, other)] = flow
            occlusions[(middle, other)] = occ
        merge_masks[middle] = merge_mask_from_occlusion(occlusions[(middle, prev)], occlusions[(middle, nxt)])

    if temporal == "interpolated":
        for middle in (-1, 1):
            prev, nxt = INTERMEDIATES[middle]
            images[middle] = synthesize_intermediate(
                images[prev],
                images[nxt],
                flows[(middle, prev)],
                flows[(middle, nxt)],
                merge_masks[middle],
            )

    logger.info("make_triplet: seed %d, shape %s, temporal=%s", scene.seed, shape, temporal)
    return TripletBundle(
        images=images,
        depths=depths,
        trajectory=trajectory,
        K=K,
        flows=flows,
        occlusions=occlusions,
        merge_masks=merge_masks,
        temporal=temporal,
    )


def _float32(data: FloatArray) -> FloatArray:
    return data.astype(np.float32).astype(np.float64)


def quantize_bundle(bundle: TripletBundle) -> TripletBundle:
    """Round ``bundle`` to what its files store: 8-bit frames and float32 grids.

    Writing the result and reading it back reproduces it exactly.
    """
    return replace(
        bundle,
        images={k: ImageGrid(quantize(g.data) / 255.0) for k, g in bundle.images.items()},
        depths={k: ImageGrid(_float32(g.data)) for k, g in bundle.depths.items()},
        flows={key: FlowField.from_array(_float32(f.data)) for key, f in bundle.flows.items()},
        occlusions={key: ValidityMask(_float32(m.values)) for key, m in bundle.occlusions.items()},
        merge_masks={k: MergeMask.from_array(_float32(m.data)) for k, m in bundle.merge_masks.items()},
    )
