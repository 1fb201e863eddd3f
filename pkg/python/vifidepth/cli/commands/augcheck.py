"""``augcheck``: verify the rectification matrix against the pixel-space affine map."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import numpy as np

from vifidepth.cli.config import RunConfig
from vifidepth.geometry.affine import (
    AffineParams,
    affine_pixel,
    rectification_matrix,
    sample_aug_params,
)
from vifidepth.geometry.camera import Intrinsics, backproject, project
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory, VifiDepth_trace

if TYPE_CHECKING:
    import argparse

logger = VifiDepthLoggerFactory.get_logger(__name__)

TOLERANCE = 1e-9
EXACT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class AugCheck:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error < self.tolerance


def defining_property_error(rng: np.random.Generator, shape: tuple[int, int], cases: int) -> float:
    """Max relative gap between ``affine_pixel(project(P))`` and ``project(R_c P)`` over random cases."""
    h, w = shape
    worst = 0.0
    for _ in range(cases):
        K = Intrinsics(
            fx=float(rng.uniform(0.5, 1.5) * w),
            fy=float(rng.uniform(0.5, 1.5) * w),
            cx=float(rng.uniform(0.4, 0.6) * (w - 1)),
            cy=float(rng.uniform(0.4, 0.6) * (h - 1)),
        )
        params = sample_aug_params(rng, shape)
        pixel = (float(rng.uniform(0, w - 1)), float(rng.uniform(0, h - 1)))
        P = backproject(pixel, float(rng.uniform(1.0, 50.0)), K)
        pixel_path = affine_pixel(params, project(P, K))
        point_path = np.array(project(rectification_matrix(K, params).matrix @ P, K))
        gap = float(np.max(np.abs(pixel_path - point_path)))
        worst = max(worst, gap / max(1.0, float(np.max(np.abs(point_path)))))
    return worst


def run_checks(K: Intrinsics, shape: tuple[int, int], seed: int, cases: int) -> list[AugCheck]:
    identity = rectification_matrix(K, AffineParams.identity(shape)).matrix
    zoom = rectification_matrix(K, AffineParams.centered(shape, scale=2.0)).matrix
    return [
        AugCheck("identity", float(np.max(np.abs(identity - np.eye(3)))), EXACT_TOLERANCE),
        AugCheck("centered_zoom2", float(np.max(np.abs(zoom - np.diag([1.0, 1.0, 0.5])))), EXACT_TOLERANCE),
        AugCheck("defining_property", defining_property_error(np.random.default_rng(seed), shape, cases), TOLERANCE),
    ]


def add_parser(subparsers: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser("augcheck", help="check the affine rectification and print R_c")
    parser.add_argument("--config", type=Path, default=None)
    parser.add_argument("--cases", type=int, default=1000)
    parser.add_argument("--scale", type=float, default=1.0)
    parser.add_argument("--theta-deg", type=float, default=0.0)
    parser.add_argument("--crop-x", type=float, default=None)
    parser.add_argument("--crop-y", type=float, default=None)
    parser.set_defaults(handler=cmd_augcheck)


def _params(shape: tuple[int, int], scale: float, theta_deg: float, crop: tuple[Optional[float], ...]) -> AffineParams:
    base = AffineParams.centered(shape, scale=scale, theta=math.radians(theta_deg))
    update = {name: value for name, value in zip(("crop_x", "crop_y"), crop) if value is not None}
    return AffineParams.model_validate(base.model_dump() | update)


@VifiDepth_trace()
def cmd_augcheck(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config)
    K = cfg.intrinsics()
    checks = run_checks(K, cfg.shape, cfg.seed, args.cases)
    lines = [f"{c.name:<18}{c.error:.3e}  {'ok' if c.passed else 'FAIL'}" for c in checks]

    params = _params(cfg.shape, args.scale, args.theta_deg, (args.crop_x, args.crop_y))
    R_c = rectification_matrix(K, params).matrix
    lines.append("R_c")
    lines.extend(" ".join(f"{v: .12f}" for v in row) for row in R_c)
    print("\n".join(lines))

    if not all(c.passed for c in checks):
        logger.error("augcheck failed: %s", ", ".join(c.name for c in checks if not c.passed))
        return 2
    return 0
