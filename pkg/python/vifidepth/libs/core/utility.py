"""Utility helpers for common patterns and environment variable expansion.

This module provides a thread-safe singleton base class and a helper function
to recursively expand environment variable placeholders in nested
configuration data.
"""

from __future__ import annotations

import os
import re
import threading
from pathlib import Path
from typing import Any, Mapping, Self, TypeAlias


class Singleton:
    """Thread-safe singleton base class.

    This class implements a singleton pattern using per-class locks to ensure
    that only one instance of each subclass is created.
    """

    _instances: dict[type, Self] = {}
    _locks: dict[type, threading.Lock] = {}

    def __new__(cls, *args: tuple[Any, ...], **kwargs: dict[str, Any]) -> Self:
        if cls not in cls._instances:
            lock = cls._locks.setdefault(cls, threading.Lock())
            with lock:
                if cls not in cls._instances:
                    instance = super().__new__(cls)
                    cls._instances[cls] = instance

                    init = getattr(cls, "__class_init__", None)
                    if callable(init):
                        init()
        return cls._instances[cls]


TExtractEnvironmentVariablesArg: TypeAlias = (
    dict[str, "TExtractEnvironmentVariablesArg"] | list["TExtractEnvironmentVariablesArg"] | str | Path
)

# ${NAME} or ${NAME:-fallback}
_PLACEHOLDER = re.compile(r"\$\{(\w+)(?::-([^}]*))?\}")


def _substitute(text: str, env: Mapping[str, str]) -> str:
    def replacer(m: re.Match[str]) -> str:
        value = env.get(m.group(1))
        if value:
            return value
        if m.group(2) is not None:
            return m.group(2)
        return m.group(0)

    return _PLACEHOLDER.sub(replacer, text)


def extract_environment_variables(
    data: TExtractEnvironmentVariablesArg,
    env: Mapping[str, str] | None = None,
) -> TExtractEnvironmentVariablesArg:
    """Recursively expand environment variable placeholders in the input data.

    Placeholders have the form ``${VAR_NAME}`` or ``${VAR_NAME:-default}``.
    Unset or empty variables fall back to the default when one is given;
    otherwise the placeholder is left unchanged.

    Supported input types are dictionaries, lists, strings, and ``Path``
    objects. Nested structures are processed recursively. Values of other
    types are returned as-is.

    Args:
        data: Input data that may contain environment variable placeholders.
        env: Mapping used for lookups. Defaults to ``os.environ``.

    Returns:
        The input data with placeholders expanded, preserving structure and
        types where possible.
    """
    env = env if env is not None else os.environ

    if isinstance(data, dict):
        return {key: extract_environment_variables(value, env) for key, value in data.items()}
    elif isinstance(data, list):
        return [extract_environment_variables(item, env) for item in data]
    elif isinstance(data, str):
        return _substitute(data, env)
    elif isinstance(data, Path):
        old_path = str(data)
        new_path = _substitute(old_path, env)
        if new_path == old_path:
            return data
        return Path(new_path)
    else:
        return data
