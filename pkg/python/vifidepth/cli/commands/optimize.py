"""``optimize``: recover depth from a bundle and report against ground truth."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from vifidepth.cli.bundle_io import position_tag, read_bundle
from vifidepth.cli.commands.synth import build_bundle
from vifidepth.cli.config import RunConfig
from vifidepth.evaluation.metrics import abs_rel_map, depth_metrics
from vifidepth.geometry.affine import sample_aug_params
from vifidepth.libs.core.formats import write_pfm
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory, VifiDepth_trace
from vifidepth.optim.optimizer import LossRecord, OptimizeResult, OptimStatus, initial_params, optimize

if TYPE_CHECKING:
    import argparse

logger = VifiDepthLoggerFactory.get_logger(__name__)

CSV_HEADER = "iter,total,pe,sm,sv,sa,sa_m"


def add_parser(subparsers: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser("optimize", help="optimize depth on a bundle")
    parser.add_argument("--config", type=Path, default=None)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--bundle", type=Path, default=None, help="bundle directory; rendered inline when omitted")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--strict", action="store_true", help="exit 2 when the run diverges")
    parser.set_defaults(handler=cmd_optimize)


def loss_csv(curve: list[LossRecord]) -> str:
    rows = [CSV_HEADER]
    for r in curve:
        rows.append(f"{r.iteration},{r.total!r},{r.pe!r},{r.sm!r},{r.sv!r},{r.sa!r},{r.sa_m!r}")
    return "\n".join(rows) + "\n"


def metrics_report(result: OptimizeResult, metrics_text: str) -> str:
    header = [f"status   {result.status.value}", f"iters    {result.iterations}"]
    return "\n".join(header) + "\n" + metrics_text


@VifiDepth_trace()
def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config)
    bundle = read_bundle(args.bundle) if args.bundle is not None else build_bundle(cfg, args.jobs)
    aug = sample_aug_params(np.random.default_rng(cfg.seed), bundle.shape, cfg.scale_range, cfg.max_rotation_deg)
    init = initial_params(
        bundle,
        depth=cfg.init_depth,
        multi=cfg.use_multi_frame,
        augmented=cfg.use_augmented,
        aug=aug,
        optimize_pose=cfg.optimize_pose,
        multi_depth=cfg.init_multi_depth,
        targets=cfg.targets,
    )
    result = optimize(bundle, init, cfg.optim(), aug)

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    for position, depth in sorted(result.depths.items()):
        write_pfm(out / f"depth_{position_tag(position)}.pfm", depth.data)
    (out / "loss.csv").write_text(loss_csv(result.loss_curve), encoding="utf-8")

    # t when estimated, else the nearest remaining target
    reported = min(result.depths, key=abs)
    final, gt = result.depths[reported], bundle.depths[reported]
    metrics = depth_metrics(final, gt, cfg.cap, cfg.min_depth, median_scaled=True)
    write_pfm(out / f"abs_rel_{position_tag(reported)}.pfm", abs_rel_map(final, gt).data)
    report = metrics_report(result, metrics.format())
    (out / "metrics.txt").write_text(report, encoding="utf-8")
    print(report, end="")

    if result.status == OptimStatus.DIVERGED:
        logger.error("optimize diverged after %d iterations", result.iterations)
        if args.strict or cfg.strict:
            return 2
    return 0
