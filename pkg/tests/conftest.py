import pytest
from vifidepth.geometry.camera import Intrinsics
from vifidepth.scene.bundle import TripletBundle, make_triplet
from vifidepth.scene.trajectory import Trajectory
from vifidepth.scene.world import Scene, generate_scene

SMALL_SHAPE = (12, 16)
FULL_SHAPE = (48, 64)


@pytest.fixture(scope="session")
def scene() -> Scene:
    return generate_scene(0)


@pytest.fixture(scope="session")
def small_bundle(scene: Scene) -> TripletBundle:
    return make_triplet(scene, Trajectory.constant_velocity(), Intrinsics.for_shape(*SMALL_SHAPE), SMALL_SHAPE)


@pytest.fixture(scope="session")
def full_bundle(scene: Scene) -> TripletBundle:
    return make_triplet(scene, Trajectory.constant_velocity(), Intrinsics.for_shape(*FULL_SHAPE), FULL_SHAPE)
