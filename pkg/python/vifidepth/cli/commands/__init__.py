"""Subcommands. Each module exposes ``add_parser(subparsers)`` and a ``cmd_*`` handler."""

from . import augcheck, evaluate, fuse_demo, gradcheck, optimize, synth

COMMANDS = (synth, gradcheck, optimize, evaluate, fuse_demo, augcheck)

__all__ = ["COMMANDS"]
