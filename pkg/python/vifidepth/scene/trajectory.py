"""Five-frame camera trajectories centred on the target position."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from vifidepth.geometry.camera import PoseSE3, pose_compose, pose_inverse, rotation_from_axis_angle
from vifidepth.geometry.imgrid import FloatArray
from vifidepth.scene.world import SceneError

# Frame positions relative to the target t.
POSITIONS: tuple[int, ...] = (-2, -1, 0, 1, 2)

MAX_STEP_TRANSLATION = 0.5
MAX_STEP_ROTATION_DEG = 3.0


@dataclass(frozen=True)
class Trajectory:
    """World-to-camera poses at positions ``t-2 .. t+2``.

    Raises:
        SceneError: If the pose count is wrong or a step between consecutive
            positions moves 0.5 m or more, or rotates 3 degrees or more.
    """

    poses: tuple[PoseSE3, ...]

    def __post_init__(self) -> None:
        if len(self.poses) != len(POSITIONS):
            raise SceneError(f"Trajectory needs {len(POSITIONS)} poses, got {len(self.poses)}")
        for k, (a, b) in enumerate(zip(self.poses[:-1], self.poses[1:])):
            step = pose_compose(b, pose_inverse(a))
            distance = float(np.linalg.norm(step.translation))
            angle = float(np.degrees(np.linalg.norm(Rotation.from_matrix(np.array(step.rotation)).as_rotvec())))
            if distance >= MAX_STEP_TRANSLATION or angle >= MAX_STEP_ROTATION_DEG:
                raise SceneError(
                    f"Step {POSITIONS[k]}->{POSITIONS[k + 1]} moves {distance:.3f} m / {angle:.3f} deg; "
                    f"limits are {MAX_STEP_TRANSLATION} m / {MAX_STEP_ROTATION_DEG} deg"
                )

    @classmethod
    def from_poses(cls, poses: Sequence[PoseSE3]) -> Trajectory:
        return cls(tuple(poses))

    @classmethod
    def static(cls, pose: PoseSE3 | None = None) -> Trajectory:
        pose = pose if pose is not None else PoseSE3.identity()
        return cls(tuple(pose for _ in POSITIONS))

    @classmethod
    def constant_velocity(
        cls,
        step_translation: FloatArray | Sequence[float] = (0.2, 0.0, 0.3),
        step_rotation: FloatArray | Sequence[float] = (0.0, 0.01, 0.0),
    ) -> Trajectory:
        """Camera moving by a fixed world-frame step per frame, at the world origin for ``t``.

        Args:
            step_translation: Camera-centre displacement per frame (meters).
            step_rotation: Axis-angle orientation change per frame (radians).
        """
        velocity = np.asarray(step_translation, dtype=np.float64)
        spin = np.asarray(step_rotation, dtype=np.float64)
        poses = []
        for k in POSITIONS:
            camera_to_world = PoseSE3(rotation_from_axis_angle(k * spin), k * velocity)
            poses.append(pose_inverse(camera_to_world))
        return cls(tuple(poses))

    def pose(self, position: int) -> PoseSE3:
        if position not in POSITIONS:
            raise SceneError(f"Position must be one of {POSITIONS}, got {position}")
        return self.poses[POSITIONS.index(position)]

    def relative(self, target: int, source: int) -> PoseSE3:
        """``T_{target->source} = pose_source o pose_target^-1``."""
        return pose_compose(self.pose(source), pose_inverse(self.pose(target)))
