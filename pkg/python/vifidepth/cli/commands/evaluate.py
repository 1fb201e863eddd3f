"""``eval``: depth metrics between two PFM files."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

from vifidepth.evaluation.metrics import MAX_DEPTH, MIN_DEPTH, depth_metrics
from vifidepth.geometry.imgrid import ImageGrid
from vifidepth.libs.core.formats import read_pfm
from vifidepth.libs.core.logging_factory import VifiDepth_trace

if TYPE_CHECKING:
    import argparse


def add_parser(subparsers: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser("eval", help="evaluate a predicted depth against ground truth")
    parser.add_argument("pred", type=Path)
    parser.add_argument("gt", type=Path)
    parser.add_argument("--median-scale", action="store_true")
    parser.add_argument("--cap", type=float, default=MAX_DEPTH)
    parser.add_argument("--min-depth", type=float, default=MIN_DEPTH)
    parser.set_defaults(handler=cmd_eval)


@VifiDepth_trace()
def cmd_eval(args: argparse.Namespace) -> int:
    pred = ImageGrid(read_pfm(args.pred))
    gt = ImageGrid(read_pfm(args.gt))
    metrics = depth_metrics(pred, gt, args.cap, args.min_depth, median_scaled=args.median_scale)
    print(metrics.format(), end="")
    return 0
