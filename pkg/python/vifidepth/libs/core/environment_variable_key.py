"""Definitions of environment variable keys used by vifidepth.

This module defines strongly typed environment variable keys and a concrete
accessor class. Centralizing the names keeps the CLI, the logging factory and
the debugger bootstrap reading the same variables the same way.
"""

import os
from collections.abc import Mapping
from enum import StrEnum, unique
from pathlib import Path
from typing import Optional

from vifidepth.libs.core.app import AppEnvironmentVariables


@unique
class VifiDepthEnv(StrEnum):
    """Runtime environment flavour (set by the rez project presets)."""

    DEV = "dev"
    RELEASE = "release"


@unique
class EnvironmentVariableKey(StrEnum):
    """String enumeration of supported environment variable keys."""

    VIFI_SEED = "VIFI_SEED"
    VIFIDEPTH_ENV = "VIFIDEPTH_ENV"
    VIFIDEPTH_LOG_FILE = "VIFIDEPTH_LOG_FILE"
    PIPELINE_LOG_LEVEL = "PIPELINE_LOG_LEVEL"

    # dev-only
    VIFIDEPTH_DEBUGGER_ENABLE = "VIFIDEPTH_DEBUGGER_ENABLE"
    VIFIDEPTH_DEBUGGER_WAIT = "VIFIDEPTH_DEBUGGER_WAIT"
    VIFIDEPTH_HOST = "VIFIDEPTH_HOST"
    VIFIDEPTH_PORT = "VIFIDEPTH_PORT"


class VifiDepthEnvironmentVariables(AppEnvironmentVariables):
    """Accessor for vifidepth environment variables.

    Reads the variables once at construction. Debugger settings are only read
    in the ``dev`` environment; in ``release`` they keep their inert defaults.
    """

    def __init__(self, env: Optional[Mapping[str, str]] = None) -> None:
        """Initializes the environment variable reader.

        Args:
            env: Optional mapping of environment variables. If not provided,
                ``os.environ`` is used.
        """
        self._env: Mapping[str, str] = env if env is not None else os.environ
        super().__init__(self._env)

        self.__VIFI_SEED: Optional[int] = self._read_int_opt(self._env, EnvironmentVariableKey.VIFI_SEED)
        self.__VIFIDEPTH_ENV: VifiDepthEnv = (
            self._read_enum_opt(self._env, EnvironmentVariableKey.VIFIDEPTH_ENV, VifiDepthEnv) or VifiDepthEnv.RELEASE
        )
        self.__VIFIDEPTH_LOG_FILE: Optional[Path] = self._read_path_opt(
            self._env, EnvironmentVariableKey.VIFIDEPTH_LOG_FILE
        )
        self.__PIPELINE_LOG_LEVEL: str = (
            self._read_str_opt(self._env, EnvironmentVariableKey.PIPELINE_LOG_LEVEL, "WARNING") or "WARNING"
        ).upper()

        # --- debug (always present attributes) ---
        self.__VIFIDEPTH_DEBUGGER_ENABLE: bool = False
        self.__VIFIDEPTH_DEBUGGER_WAIT: bool = False
        self.__VIFIDEPTH_HOST: str = "127.0.0.1"
        self.__VIFIDEPTH_PORT: int = 5678
        if self.VIFIDEPTH_ENV == VifiDepthEnv.DEV:
            self._init_dev()

    def _init_dev(self) -> None:
        self.__VIFIDEPTH_DEBUGGER_ENABLE = bool(
            self._read_bool_opt(self._env, EnvironmentVariableKey.VIFIDEPTH_DEBUGGER_ENABLE)
        )
        self.__VIFIDEPTH_DEBUGGER_WAIT = bool(
            self._read_bool_opt(self._env, EnvironmentVariableKey.VIFIDEPTH_DEBUGGER_WAIT)
        )
        host = self._read_str_opt(self._env, EnvironmentVariableKey.VIFIDEPTH_HOST)
        if host is not None:
            self.__VIFIDEPTH_HOST = host
        port = self._read_int_opt(self._env, EnvironmentVariableKey.VIFIDEPTH_PORT)
        if port is not None:
            self.__VIFIDEPTH_PORT = port

    @property
    def VIFI_SEED(self) -> Optional[int]:
        """Returns the seed override, if one is set.

        Returns:
            The integer seed, or ``None`` when the config seed applies.
        """
        return self.__VIFI_SEED

    @property
    def VIFIDEPTH_ENV(self) -> VifiDepthEnv:
        """Returns the active runtime environment (``release`` when unset)."""
        return self.__VIFIDEPTH_ENV

    @property
    def VIFIDEPTH_LOG_FILE(self) -> Optional[Path]:
        """Returns the optional log file path."""
        return self.__VIFIDEPTH_LOG_FILE

    @property
    def PIPELINE_LOG_LEVEL(self) -> str:
        """Returns the upper-cased log level name (``WARNING`` when unset)."""
        return self.__PIPELINE_LOG_LEVEL

    # -------------------------
    # properties (debug)
    # -------------------------

    @property
    def VIFIDEPTH_DEBUGGER_ENABLE(self) -> bool:
        """Returns whether a debugpy listener should be started."""
        return self.__VIFIDEPTH_DEBUGGER_ENABLE

    @property
    def VIFIDEPTH_DEBUGGER_WAIT(self) -> bool:
        """Returns whether startup blocks until a debugger client attaches."""
        return self.__VIFIDEPTH_DEBUGGER_WAIT

    @property
    def VIFIDEPTH_HOST(self) -> str:
        """Returns the debugger listen host."""
        return self.__VIFIDEPTH_HOST

    @property
    def VIFIDEPTH_PORT(self) -> int:
        """Returns the debugger listen port."""
        return self.__VIFIDEPTH_PORT
