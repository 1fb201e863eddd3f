"""``synth``: render a triplet bundle to disk."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

from vifidepth.cli.bundle_io import write_bundle
from vifidepth.cli.config import RunConfig
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory, VifiDepth_trace
from vifidepth.scene.bundle import TripletBundle, make_triplet, quantize_bundle
from vifidepth.scene.world import generate_scene

if TYPE_CHECKING:
    import argparse

logger = VifiDepthLoggerFactory.get_logger(__name__)


def build_bundle(cfg: RunConfig, jobs: int = 1) -> TripletBundle:
    """Scene, trajectory and bundle described by ``cfg``, rounded to its on-disk precision."""
    scene = generate_scene(cfg.seed, cfg.scene())
    bundle = make_triplet(scene, cfg.build_trajectory(), cfg.intrinsics(), cfg.shape, cfg.temporal, jobs)
    return quantize_bundle(bundle)


def add_parser(subparsers: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser("synth", help="render a synthetic triplet bundle")
    parser.add_argument("--config", type=Path, default=None, help="key = value run configuration")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="worker threads for ray casting")
    parser.set_defaults(handler=cmd_synth)


@VifiDepth_trace()
def cmd_synth(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config)
    bundle = build_bundle(cfg, args.jobs)
    manifest = write_bundle(bundle, args.out)
    print(manifest)
    return 0
