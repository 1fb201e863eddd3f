"""Sigmoid depth parameterization and flat-vector packing of optimizer state."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from vifidepth.geometry.camera import PoseParams
from vifidepth.geometry.imgrid import FloatArray, ImageGrid

# D = 1 / (a sigma + b) spans [0.1, 100] for sigma in [0, 1].
DEPTH_A = 9.99
DEPTH_B = 0.01


class OptimError(RuntimeError):
    """Raised on invalid optimizer state or a numerical failure."""


@dataclass(frozen=True)
class DepthParam:
    """Per-pixel sigmoid output and the decoding constants."""

    sigma: ImageGrid
    a: float = DEPTH_A
    b: float = DEPTH_B

    def __post_init__(self) -> None:
        if self.sigma.channels != 1:
            raise OptimError(f"sigma must have one channel, got {self.sigma.channels}")
        if not (self.a > 0.0 and self.b > 0.0):
            raise OptimError(f"a and b must be positive, got a={self.a}, b={self.b}")
        values = self.sigma.data
        if values.min() <= 0.0 or values.max() >= 1.0:
            raise OptimError(f"sigma must lie in (0, 1), got [{values.min():.6g}, {values.max():.6g}]")

    @classmethod
    def constant(cls, shape: tuple[int, int], depth: float) -> DepthParam:
        return sigma_from_depth(ImageGrid.full(shape[0], shape[1], depth))

    @property
    def shape(self) -> tuple[int, int]:
        return self.sigma.shape


def decode_depth(p: DepthParam) -> ImageGrid:
    """``D = 1 / (a sigma + b)``."""
    return ImageGrid(1.0 / (p.a * p.sigma.data + p.b))


def depth_derivative(p: DepthParam) -> FloatArray:
    """``dD/dsigma = -a / (a sigma + b)^2`` as an ``(H, W)`` array."""
    denom = p.a * p.sigma.plane() + p.b
    return -p.a / (denom * denom)


def sigma_from_depth(D: ImageGrid, a: float = DEPTH_A, b: float = DEPTH_B) -> DepthParam:
    """Invert :func:`decode_depth`.

    Raises:
        OptimError: If a depth is outside the open decodable range.
    """
    depth = D.plane()
    lo, hi = 1.0 / (a + b), 1.0 / b
    if depth.min() <= lo or depth.max() >= hi:
        raise OptimError(f"Depth must lie in ({lo:.6g}, {hi:.6g}), got [{depth.min():.6g}, {depth.max():.6g}]")
    return DepthParam(ImageGrid((1.0 / depth - b) / a), a, b)


# =========================
# Objective parameters
# =========================


@dataclass(frozen=True)
class ObjectiveParams:
    """Everything the objective is differentiated against.

    Attributes:
        depth: Single-frame depth per target position.
        multi: Multi-frame depth per target position (usually only ``t``).
        augmented: Depth of the affine-augmented view per target position.
        poses: ``(target, source)`` -> pose parameters; empty when poses
            are taken from the bundle.
    """

    depth: Mapping[int, DepthParam]
    multi: Mapping[int, DepthParam] = field(default_factory=dict)
    augmented: Mapping[int, DepthParam] = field(default_factory=dict)
    poses: Mapping[tuple[int, int], PoseParams] = field(default_factory=dict)


@dataclass(frozen=True)
class ObjectiveGradient:
    """Gradient with the layout of :class:`ObjectiveParams`; grids are ``(H, W)``."""

    depth: dict[int, FloatArray]
    multi: dict[int, FloatArray]
    augmented: dict[int, FloatArray]
    poses: dict[tuple[int, int], FloatArray]


@dataclass(frozen=True)
class _Slot:
    group: str
    key: object
    start: int
    stop: int


@dataclass(frozen=True)
class ParamLayout:
    """Fixed ordering of every scalar parameter in a flat vector.

    Groups come in the order depth, multi, augmented, poses; keys within a
    group are sorted.
    """

    shape: tuple[int, int]
    slots: tuple[_Slot, ...]
    a: float = DEPTH_A
    b: float = DEPTH_B

    @classmethod
    def of(cls, params: ObjectiveParams) -> ParamLayout:
        if not params.depth:
            raise OptimError("ObjectiveParams needs at least one target depth")
        shapes = {p.shape for group in (params.depth, params.multi, params.augmented) for p in group.values()}
        if len(shapes) != 1:
            raise OptimError(f"All depth grids must share one shape, got {sorted(shapes)}")
        shape = shapes.pop()
        first = next(iter(params.depth.values()))
        size = shape[0] * shape[1]
        slots: list[_Slot] = []
        offset = 0
        for group in ("depth", "multi", "augmented"):
            for key in sorted(getattr(params, group)):
                slots.append(_Slot(group, key, offset, offset + size))
                offset += size
        for pose_key in sorted(params.poses):
            slots.append(_Slot("poses", pose_key, offset, offset + 6))
            offset += 6
        return cls(shape=shape, slots=tuple(slots), a=first.a, b=first.b)

    @property
    def size(self) -> int:
        return self.slots[-1].stop if self.slots else 0

    def flatten(self, params: ObjectiveParams) -> FloatArray:
        out = np.empty(self.size)
        for slot in self.slots:
            if slot.group == "poses":
                out[slot.start : slot.stop] = params.poses[slot.key].as_vector()  # type: ignore[index]
            else:
                out[slot.start : slot.stop] = getattr(params, slot.group)[slot.key].sigma.data.ravel()
        return out

    def flatten_gradient(self, grad: ObjectiveGradient) -> FloatArray:
        out = np.empty(self.size)
        for slot in self.slots:
            out[slot.start : slot.stop] = np.ravel(getattr(grad, slot.group)[slot.key])
        return out

    def unflatten(self, vector: FloatArray) -> ObjectiveParams:
        """Rebuild parameters from a flat vector.

        Raises:
            OptimError: If the vector length does not match the layout.
        """
        if vector.shape != (self.size,):
            raise OptimError(f"Parameter vector must have shape ({self.size},), got {vector.shape}")
        groups: dict[str, dict[object, object]] = {"depth": {}, "multi": {}, "augmented": {}, "poses": {}}
        h, w = self.shape
        for slot in self.slots:
            chunk = vector[slot.start : slot.stop]
            if slot.group == "poses":
                groups["poses"][slot.key] = PoseParams.from_vector(chunk)
            else:
                groups[slot.group][slot.key] = DepthParam(ImageGrid(chunk.reshape(h, w)), self.a, self.b)
        return ObjectiveParams(
            depth=groups["depth"],  # type: ignore[arg-type]
            multi=groups["multi"],  # type: ignore[arg-type]
            augmented=groups["augmented"],  # type: ignore[arg-type]
            poses=groups["poses"],  # type: ignore[arg-type]
        )

    def sigma_mask(self) -> FloatArray:
        """1 on sigma entries, 0 on pose entries."""
        mask = np.zeros(self.size)
        for slot in self.slots:
            if slot.group != "poses":
                mask[slot.start : slot.stop] = 1.0
        return mask
