"""Entry point for the ``vifidepth`` command.

Exit codes:
    0: success
    1: usage or configuration error
    2: numerical failure (divergence under ``--strict``, gradient or rectification check breach)
    3: I/O error
"""

from __future__ import annotations

import argparse
import sys
from typing import TYPE_CHECKING, NoReturn, Optional

from vifidepth.cli.commands import COMMANDS
from vifidepth.libs.core.app.app_environment_variables import EnvironmentVariableError
from vifidepth.libs.core.debug import attach_debugger_if_enabled
from vifidepth.libs.core.formats import FormatError
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory
from vifidepth.libs.core.parsing.config.loader import ConfigLoaderError
from vifidepth.optim.params import OptimError
from vifidepth.scene.world import SceneError

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = VifiDepthLoggerFactory.get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


class UsageError(RuntimeError):
    """Raised instead of argparse's own ``SystemExit(2)`` on bad arguments."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vifidepth", description="Self-supervised monocular depth geometry engine.")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def exit_code_for(error: BaseException) -> int:
    """Map an exception escaping a subcommand to a process exit code."""
    if isinstance(error, (FormatError, OSError)):
        return EXIT_IO
    if isinstance(error, FloatingPointError):
        return EXIT_NUMERICAL
    # pydantic's ValidationError and the geometry errors are ValueErrors
    if isinstance(error, (UsageError, ConfigLoaderError, EnvironmentVariableError, SceneError, OptimError, ValueError)):
        return EXIT_USAGE
    raise error


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        attach_debugger_if_enabled()
        code: int = args.handler(args)
    except Exception as e:
        code = exit_code_for(e)
        logger.error("%s: %s", type(e).__name__, e)
        print(f"vifidepth: error: {e}", file=sys.stderr)
    return code
