from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path


class ConfigLoaderError(RuntimeError):
    """Raised when config loading or parsing fails."""


# =========================
# Regex Models
# =========================


@dataclass(frozen=True)
class IncludeRule:
    """Model for @include "..." directives."""

    pattern: re.Pattern[str]


@dataclass(frozen=True)
class EntryPattern:
    """Patterns for key = value lines."""

    comment: re.Pattern[str]
    entry: re.Pattern[str]


INCLUDE_RULE = IncludeRule(pattern=re.compile(r'^@include\s+"([^"]+)"\s*$'))

ENTRY_PATTERN = EntryPattern(
    comment=re.compile(r"\s*#.*$"),
    entry=re.compile(r"^([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$"),
)


# =========================
# Loader
# =========================


class ConfigLoader:
    """
    Plain-text ``key = value`` config loader.

    Responsibilities:
    - Load config files
    - Resolve @include directives safely
    - Reject duplicate keys

    Notes:
    - Values are returned as raw strings; typing is the caller's job
    - Included entries are merged in place, in file order
    """

    def __init__(self, root: Path) -> None:
        self._root = root.resolve()

    def load(self, path: Path) -> dict[str, str]:
        """
        Load and flatten a config file.

        Args:
            path: Path to the root config file.

        Returns:
            Ordered mapping of keys to raw string values.

        Raises:
            ConfigLoaderError: On invalid path, include failure, malformed
                line, or duplicate key.
        """
        path = path.resolve()

        if not path.is_file():
            raise ConfigLoaderError(f"Config file not found: {path}")

        entries: dict[str, str] = {}
        origins: dict[str, str] = {}
        self._parse(path, entries, origins, stack=())
        return entries

    def loads(self, text: str, source: str = "<string>") -> dict[str, str]:
        """
        Parse config text that has no file behind it.

        ``@include`` is resolved against the loader root.

        Args:
            text: Config content.
            source: Name used in error messages.

        Returns:
            Ordered mapping of keys to raw string values.
        """
        entries: dict[str, str] = {}
        origins: dict[str, str] = {}
        self._parse_text(text, source, self._root, entries, origins, stack=())
        return entries

    # -------------------------
    # Internal processing
    # -------------------------

    def _parse(
        self,
        path: Path,
        entries: dict[str, str],
        origins: dict[str, str],
        stack: tuple[Path, ...],
    ) -> None:
        if path in stack:
            raise ConfigLoaderError(f"Circular @include: {path}")
        try:
            text = path.read_text(encoding="utf-8-sig")
        except OSError as e:
            raise ConfigLoaderError(f"Cannot read config file: {path}") from e
        self._parse_text(text, str(path), path.parent, entries, origins, stack + (path,))

    def _parse_text(
        self,
        text: str,
        source: str,
        base_dir: Path,
        entries: dict[str, str],
        origins: dict[str, str],
        stack: tuple[Path, ...],
    ) -> None:
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = ENTRY_PATTERN.comment.sub("", raw).strip()
            if not line:
                continue

            include = INCLUDE_RULE.pattern.match(line)
            if include is not None:
                relative_path = include.group(1)
                target = (base_dir / relative_path).resolve()

                # Security: prevent path traversal
                if not target.is_relative_to(self._root):
                    raise ConfigLoaderError(f"Illegal @include path: {relative_path} ({source}:{lineno})")
                if not target.is_file():
                    raise ConfigLoaderError(f"Included config not found: {relative_path} ({source}:{lineno})")

                self._parse(target, entries, origins, stack)
                continue

            entry = ENTRY_PATTERN.entry.match(line)
            if entry is None:
                raise ConfigLoaderError(f"Malformed config line {source}:{lineno}: {raw.strip()!r}")

            key, value = entry.group(1), entry.group(2)
            where = f"{source}:{lineno}"
            if key in entries:
                raise ConfigLoaderError(f"Duplicate config key '{key}' at {where} (first set at {origins[key]})")
            entries[key] = value
            origins[key] = where
