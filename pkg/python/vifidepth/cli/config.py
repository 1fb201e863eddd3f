"""Run configuration: one flat, validated record projected into per-module configs."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from vifidepth.fusion.alignment import FusionConfig, FusionVariant
from vifidepth.geometry.camera import Intrinsics
from vifidepth.libs.core.environment_variable_key import VifiDepthEnvironmentVariables
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory
from vifidepth.libs.core.parsing.config import ConfigLoader
from vifidepth.losses.consistency import ConsistencyConfig
from vifidepth.losses.photometric import PhotoConfig
from vifidepth.optim.objective import TARGETS, LossWeights
from vifidepth.optim.optimizer import OptimConfig
from vifidepth.scene.trajectory import Trajectory
from vifidepth.scene.world import SceneConfig

logger = VifiDepthLoggerFactory.get_logger(__name__)

_TUPLE_FIELDS = ("trajectory_translation", "trajectory_rotation", "relief_wavelength", "texture_wavelength", "targets")


class RunConfig(BaseModel):
    """Every tunable of a CLI run, with defaults at the published values.

    Unknown keys are rejected. Tuple values are written as comma-separated
    numbers in config files.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    seed: int = 0

    # scene
    scene_mode: Literal["surface", "plane"] = "surface"
    plane_depth: float = 8.0
    base_depth: float = 8.0
    relief_amplitude: float = 0.8
    relief_wavelength: tuple[float, float] = (4.0, 10.0)
    texture_wavelength: tuple[float, float] = (2.0, 6.0)
    feature_channels: int = Field(default=4, gt=0)
    height: int = Field(default=48, gt=1)
    width: int = Field(default=64, gt=1)
    focal_ratio: float = Field(default=0.9, gt=0.0)
    fx: Optional[float] = None
    fy: Optional[float] = None
    cx: Optional[float] = None
    cy: Optional[float] = None
    trajectory: Literal["constant_velocity", "static"] = "constant_velocity"
    trajectory_translation: tuple[float, float, float] = (0.2, 0.0, 0.3)
    trajectory_rotation: tuple[float, float, float] = (0.0, 0.01, 0.0)
    temporal: Literal["rendered", "interpolated"] = "rendered"

    # augmentation
    scale_min: float = Field(default=1.2, ge=1.0)
    scale_max: float = Field(default=2.0, ge=1.0)
    max_rotation_deg: float = Field(default=5.0, ge=0.0)

    # losses
    alpha: float = 0.85
    gamma: float = 0.001
    ssim_window: int = 3
    beta: float = 0.5
    lambda_: float = Field(default=0.2, alias="lambda")
    use_photometric: bool = True
    use_smoothness: bool = True
    use_multi_frame: bool = True
    use_augmented: bool = True
    use_svdc: bool = True
    use_sadc: bool = True
    auto_masking: bool = True

    # fusion
    pe_octaves: int = Field(default=10, gt=0)
    num_levels: int = Field(default=4, gt=0)
    fusion_variant: FusionVariant = FusionVariant.OAFF

    # optimizer
    targets: tuple[int, ...] = TARGETS
    max_iters: int = Field(default=2000, gt=0)
    step_size: float = 0.05
    momentum: float = 0.9
    optimize_pose: bool = False
    log_every: int = Field(default=100, gt=0)
    init_depth: Optional[float] = None
    init_multi_depth: Optional[float] = None
    strict: bool = False

    # evaluation
    cap: float = Field(default=80.0, gt=0.0)
    min_depth: float = Field(default=0.1, gt=0.0)

    @field_validator(*_TUPLE_FIELDS, mode="before")
    @classmethod
    def _split_tuple(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(part.strip() for part in value.split(",") if part.strip())
        return value

    @field_validator("targets")
    @classmethod
    def _known_targets(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if not value or not set(value) <= set(TARGETS):
            raise ValueError(f"targets must be a non-empty subset of {TARGETS}, got {value}")
        return tuple(sorted(set(value)))

    @field_validator("fx", "fy", "cx", "cy", "init_depth", "init_multi_depth", mode="before")
    @classmethod
    def _none_word(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() in ("", "none"):
            return None
        return value

    # =========================
    # Loading
    # =========================

    @classmethod
    def from_mapping(
        cls, values: dict[str, str], env: Optional[VifiDepthEnvironmentVariables] = None
    ) -> RunConfig:
        """Validate raw key/value strings; ``VIFI_SEED`` overrides ``seed``."""
        env = env if env is not None else VifiDepthEnvironmentVariables()
        data: dict[str, Any] = dict(values)
        if env.VIFI_SEED is not None:
            logger.info("VIFI_SEED=%d overrides seed", env.VIFI_SEED)
            data["seed"] = env.VIFI_SEED
        return cls.model_validate(data)

    @classmethod
    def load(cls, path: Optional[Path], env: Optional[VifiDepthEnvironmentVariables] = None) -> RunConfig:
        """Read a ``key = value`` file (includes resolved against its directory)."""
        if path is None:
            return cls.from_mapping({}, env)
        return cls.from_mapping(ConfigLoader(path.parent).load(path), env)

    # =========================
    # Projections
    # =========================

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def intrinsics(self) -> Intrinsics:
        base = Intrinsics.for_shape(self.height, self.width, self.focal_ratio)
        return Intrinsics(
            fx=self.fx if self.fx is not None else base.fx,
            fy=self.fy if self.fy is not None else base.fy,
            cx=self.cx if self.cx is not None else base.cx,
            cy=self.cy if self.cy is not None else base.cy,
        )

    def scene(self) -> SceneConfig:
        return SceneConfig(
            mode=self.scene_mode,
            plane_depth=self.plane_depth,
            base_depth=self.base_depth,
            relief_amplitude=self.relief_amplitude,
            relief_wavelength=self.relief_wavelength,
            texture_wavelength=self.texture_wavelength,
            feature_channels=self.feature_channels,
        )

    def build_trajectory(self) -> Trajectory:
        if self.trajectory == "static":
            return Trajectory.static()
        return Trajectory.constant_velocity(self.trajectory_translation, self.trajectory_rotation)

    def photo(self) -> PhotoConfig:
        return PhotoConfig(alpha=self.alpha, gamma=self.gamma, ssim_window=self.ssim_window)

    def consistency(self) -> ConsistencyConfig:
        return ConsistencyConfig(beta=self.beta, lambda_=self.lambda_)

    def fusion(self) -> FusionConfig:
        return FusionConfig(num_levels=self.num_levels, pe_octaves=self.pe_octaves, variant=self.fusion_variant)

    def loss_weights(self) -> LossWeights:
        return LossWeights(
            photometric=self.use_photometric,
            smoothness=self.use_smoothness,
            multi_frame=self.use_multi_frame,
            augmented=self.use_augmented,
            svdc=self.use_svdc,
            sadc=self.use_sadc,
            auto_masking=self.auto_masking,
        )

    def optim(self) -> OptimConfig:
        return OptimConfig(
            max_iters=self.max_iters,
            step_size=self.step_size,
            momentum=self.momentum,
            optimize_pose=self.optimize_pose,
            log_every=self.log_every,
            loss_weights=self.loss_weights(),
            photo=self.photo(),
            consistency=self.consistency(),
        )

    @property
    def scale_range(self) -> tuple[float, float]:
        return (self.scale_min, self.scale_max)

    def summary(self) -> dict[str, str]:
        """Published constants echoed into reports."""
        return {
            "alpha": repr(self.alpha),
            "gamma": repr(self.gamma),
            "beta": repr(self.beta),
            "lambda": repr(self.lambda_),
            "pe_octaves": str(self.pe_octaves),
            "scale_range": f"{self.scale_min!r},{self.scale_max!r}",
            "rotation_range_rad": repr(math.radians(self.max_rotation_deg)),
            "cap": repr(self.cap),
        }
