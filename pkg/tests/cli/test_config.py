import math
from pathlib import Path

import pytest
from pydantic import ValidationError
from vifidepth.cli.config import RunConfig
from vifidepth.fusion.alignment import FusionVariant
from vifidepth.libs.core.environment_variable_key import VifiDepthEnvironmentVariables
from vifidepth.libs.core.parsing.config.loader import ConfigLoaderError

NO_ENV = VifiDepthEnvironmentVariables({})


def test_defaults_match_published_constants() -> None:
    cfg = RunConfig.from_mapping({}, NO_ENV)

    assert cfg.summary() == {
        "alpha": "0.85",
        "gamma": "0.001",
        "beta": "0.5",
        "lambda": "0.2",
        "pe_octaves": "10",
        "scale_range": "1.2,2.0",
        "rotation_range_rad": repr(math.radians(5.0)),
        "cap": "80.0",
    }
    assert cfg.shape == (48, 64)


def test_string_values_are_typed() -> None:
    cfg = RunConfig.from_mapping(
        {
            "seed": "4",
            "scene_mode": "plane",
            "trajectory_translation": "0.1, 0, 0.2",
            "lambda": "0.3",
            "fx": "none",
            "use_sadc": "false",
        },
        NO_ENV,
    )

    assert cfg.seed == 4
    assert cfg.scene().mode == "plane"
    assert cfg.trajectory_translation == (0.1, 0.0, 0.2)
    assert cfg.lambda_ == 0.3
    assert cfg.fx is None
    assert cfg.loss_weights().sadc is False


@pytest.mark.parametrize(
    "values",
    [{"unknown_key": "1"}, {"scene_mode": "sphere"}, {"height": "1"}, {"trajectory_rotation": "0,1"}],
)
def test_invalid_values_are_rejected(values: dict[str, str]) -> None:
    with pytest.raises(ValidationError):
        RunConfig.from_mapping(values, NO_ENV)


def test_seed_environment_override() -> None:
    env = VifiDepthEnvironmentVariables({"VIFI_SEED": "7"})

    assert RunConfig.from_mapping({"seed": "3"}, env).seed == 7


def test_load_with_include(tmp_path: Path) -> None:
    (tmp_path / "base.cfg").write_text("height = 12\nwidth = 16\n")
    run = tmp_path / "run.cfg"
    run.write_text('@include "base.cfg"\nmax_iters = 5  # short\n')

    cfg = RunConfig.load(run, NO_ENV)

    assert cfg.shape == (12, 16)
    assert cfg.optim().max_iters == 5


def test_load_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ConfigLoaderError):
        RunConfig.load(tmp_path / "missing.cfg", NO_ENV)


def test_projections() -> None:
    cfg = RunConfig.from_mapping(
        {"height": "12", "width": "16", "fx": "20.5", "trajectory": "static", "beta": "0.25", "max_iters": "9"},
        NO_ENV,
    )

    K = cfg.intrinsics()
    assert (K.fx, K.fy) == (20.5, pytest.approx(0.9 * 16))
    assert (K.cx, K.cy) == (7.5, 5.5)
    assert cfg.build_trajectory().relative(0, 2).translation.tolist() == [0.0, 0.0, 0.0]
    assert cfg.consistency().beta == 0.25
    optim = cfg.optim()
    assert optim.max_iters == 9
    assert optim.consistency.beta == 0.25
    assert optim.photo.alpha == 0.85
    assert cfg.fusion().num_levels == 4


def test_targets_and_fusion_variant() -> None:
    cfg = RunConfig.from_mapping({"targets": "1, 0", "fusion_variant": "mafa"}, NO_ENV)

    assert cfg.targets == (0, 1)
    assert cfg.fusion().variant == FusionVariant.MAFA
    assert RunConfig.from_mapping({}, NO_ENV).targets == (-1, 0, 1)
    assert RunConfig.from_mapping({}, NO_ENV).fusion().variant == FusionVariant.OAFF


@pytest.mark.parametrize("values", [{"targets": "2"}, {"targets": ""}, {"fusion_variant": "concat"}])
def test_invalid_ablation_keys(values: dict[str, str]) -> None:
    with pytest.raises(ValidationError):
        RunConfig.from_mapping(values, NO_ENV)
