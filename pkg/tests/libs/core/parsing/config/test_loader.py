from pathlib import Path

import pytest
from vifidepth.libs.core.parsing.config.loader import (
    ConfigLoader,
    ConfigLoaderError,
)


@pytest.fixture
def config_root(tmp_path: Path) -> Path:
    return tmp_path


def test_simple_entries(config_root: Path) -> None:
    main = config_root / "run.cfg"
    main.write_text("seed = 3\n# comment\nalpha = 0.85   # trailing\n\nscene_mode = plane\n")

    result = ConfigLoader(config_root).load(main)

    assert result == {"seed": "3", "alpha": "0.85", "scene_mode": "plane"}


def test_simple_include(config_root: Path) -> None:
    base = config_root / "base.cfg"
    main = config_root / "main.cfg"

    base.write_text("width = 64\nheight = 48\n")
    main.write_text('seed = 1\n@include "base.cfg"\nbeta = 0.85\n')

    result = ConfigLoader(config_root).load(main)

    assert list(result) == ["seed", "width", "height", "beta"]
    assert result["width"] == "64"


def test_missing_include_file(config_root: Path) -> None:
    main = config_root / "main.cfg"
    main.write_text('@include "missing.cfg"')

    loader = ConfigLoader(config_root)

    with pytest.raises(ConfigLoaderError):
        loader.load(main)


def test_path_traversal_is_blocked(config_root: Path) -> None:
    sub = config_root / "sub"
    sub.mkdir()
    outside = config_root / "evil.cfg"
    outside.write_text("seed = 666\n")

    main = sub / "main.cfg"
    main.write_text('@include "../evil.cfg"')

    loader = ConfigLoader(sub)

    with pytest.raises(ConfigLoaderError, match="Illegal"):
        loader.load(main)


def test_duplicate_key_names_key_and_line(config_root: Path) -> None:
    main = config_root / "main.cfg"
    main.write_text("seed = 1\nalpha = 0.5\nseed = 2\n")

    with pytest.raises(ConfigLoaderError, match=r"'seed'.*main\.cfg:3"):
        ConfigLoader(config_root).load(main)


def test_duplicate_across_include(config_root: Path) -> None:
    (config_root / "base.cfg").write_text("seed = 1\n")
    main = config_root / "main.cfg"
    main.write_text('@include "base.cfg"\nseed = 2\n')

    with pytest.raises(ConfigLoaderError, match="Duplicate"):
        ConfigLoader(config_root).load(main)


def test_circular_include(config_root: Path) -> None:
    (config_root / "a.cfg").write_text('@include "b.cfg"\n')
    (config_root / "b.cfg").write_text('@include "a.cfg"\n')

    with pytest.raises(ConfigLoaderError, match="Circular"):
        ConfigLoader(config_root).load(config_root / "a.cfg")


def test_malformed_line(config_root: Path) -> None:
    main = config_root / "main.cfg"
    main.write_text("seed 3\n")

    with pytest.raises(ConfigLoaderError, match="Malformed"):
        ConfigLoader(config_root).load(main)


def test_missing_root_file(config_root: Path) -> None:
    with pytest.raises(ConfigLoaderError, match="not found"):
        ConfigLoader(config_root).load(config_root / "nope.cfg")


def test_loads_from_text(config_root: Path) -> None:
    (config_root / "base.cfg").write_text("gamma = 0.001\n")

    result = ConfigLoader(config_root).loads('@include "base.cfg"\nlambda = 0.1\n')

    assert result == {"gamma": "0.001", "lambda": "0.1"}
