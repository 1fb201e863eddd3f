"""``gradcheck``: run every registered gradient case against finite differences."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

from vifidepth.cli.config import RunConfig
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory, VifiDepth_trace
from vifidepth.optim.gradcheck import GRADIENT_CASES, GradcheckReport, run_case

if TYPE_CHECKING:
    import argparse

logger = VifiDepthLoggerFactory.get_logger(__name__)


def add_parser(subparsers: argparse._SubParsersAction[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser("gradcheck", help="validate analytic gradients")
    parser.add_argument("--config", type=Path, default=None)
    parser.add_argument("--coords", type=int, default=100, help="kink-free coordinates per case")
    parser.add_argument(
        "--case",
        action="append",
        choices=sorted(GRADIENT_CASES),
        help="restrict to a case (repeatable); all cases by default",
    )
    parser.add_argument("--jobs", type=int, default=1)
    parser.set_defaults(handler=cmd_gradcheck)


def format_table(reports: list[GradcheckReport]) -> str:
    lines = [f"{'case':<16}{'max_rel_err':>14}{'samples':>9}{'rejected':>10}  status"]
    for r in reports:
        status = "ok" if r.passed else "FAIL"
        lines.append(f"{r.name:<16}{r.max_rel_err:>14.3e}{len(r.entries):>9}{r.rejected:>10}  {status}")
    return "\n".join(lines) + "\n"


@VifiDepth_trace()
def cmd_gradcheck(args: argparse.Namespace) -> int:
    cfg = RunConfig.load(args.config)
    names = args.case or list(GRADIENT_CASES)
    reports = [run_case(name, seed=cfg.seed, coords=args.coords, jobs=args.jobs) for name in names]
    print(format_table(reports), end="")
    failed = [r.name for r in reports if not r.passed]
    if failed:
        logger.error("gradcheck failed for %s", ", ".join(failed))
        return 2
    return 0
