import numpy as np
import pytest
from vifidepth.fusion.interpolation import backward_warp
from vifidepth.geometry.camera import Intrinsics, PoseSE3, reproject_map, rotation_from_axis_angle
from vifidepth.geometry.imgrid import pixel_lattice
from vifidepth.scene.bundle import TripletBundle
from vifidepth.scene.world import (
    DEPTH_RANGE,
    Scene,
    SceneConfig,
    SceneError,
    cast_rays,
    generate_scene,
    ground_truth_flow,
    render_features,
    render_view,
)

SHAPE = (12, 16)


@pytest.fixture
def K() -> Intrinsics:
    return Intrinsics.for_shape(*SHAPE)


@pytest.fixture
def plane() -> Scene:
    return generate_scene(0, SceneConfig(mode="plane", plane_depth=6.0))


# =========================
# Scene generation
# =========================


def test_same_seed_gives_identical_scenes() -> None:
    a, b = generate_scene(4), generate_scene(4)

    for field in ("offset", "amplitude", "direction", "wavelength", "phase"):
        np.testing.assert_array_equal(getattr(a.relief, field), getattr(b.relief, field))
        np.testing.assert_array_equal(getattr(a.albedo_waves, field), getattr(b.albedo_waves, field))
    assert not np.array_equal(generate_scene(5).relief.phase, a.relief.phase)


def test_plane_mode_height_is_constant(plane: Scene) -> None:
    X, Y = np.meshgrid(np.linspace(-20, 20, 9), np.linspace(-20, 20, 9))

    np.testing.assert_array_equal(plane.height(X, Y), 6.0)


def test_height_and_albedo_ranges_over_seeds() -> None:
    rng = np.random.default_rng(0)
    X, Y = rng.uniform(-50, 50, size=(2, 1000))
    for seed in range(100):
        scene = generate_scene(seed)
        h = scene.height(X, Y)
        lo, hi = scene.config.depth_bounds()
        assert DEPTH_RANGE[0] <= lo <= h.min() and h.max() <= hi <= DEPTH_RANGE[1]
        albedo = scene.albedo(X, Y)
        assert albedo.min() >= 0.0 and albedo.max() <= 1.0


def test_config_rejects_surface_outside_depth_range() -> None:
    with pytest.raises(ValueError):
        SceneConfig(base_depth=1.2, relief_amplitude=0.5)
    with pytest.raises(ValueError):
        SceneConfig(relief_wavelength=(5.0, 2.0))


# =========================
# Rendering
# =========================


def test_plane_render_depth(plane: Scene, K: Intrinsics) -> None:
    view = render_view(plane, PoseSE3.identity(), K, SHAPE)

    np.testing.assert_allclose(view.depth.plane(), 6.0, atol=1e-8)
    assert view.image.channels == 3


def test_render_is_deterministic_and_jobs_independent(scene: Scene, K: Intrinsics) -> None:
    a = render_view(scene, PoseSE3.identity(), K, SHAPE)
    b = render_view(scene, PoseSE3.identity(), K, SHAPE, jobs=3)

    np.testing.assert_array_equal(a.image.data, b.image.data)
    np.testing.assert_array_equal(a.depth.data, b.depth.data)


def test_hit_points_lie_on_surface(scene: Scene, K: Intrinsics) -> None:
    points = cast_rays(scene, PoseSE3.identity(), K, pixel_lattice(*SHAPE))

    np.testing.assert_allclose(points[..., 2], scene.height(points[..., 0], points[..., 1]), atol=1e-8)


def test_camera_behind_surface_is_rejected(scene: Scene, K: Intrinsics) -> None:
    # camera centre at Z = 9, inside the relief band
    with pytest.raises(SceneError, match="front"):
        render_view(scene, PoseSE3(np.eye(3), np.array([0.0, 0.0, -9.0])), K, SHAPE)


def test_camera_facing_away_is_rejected(scene: Scene, K: Intrinsics) -> None:
    flipped = PoseSE3(rotation_from_axis_angle(np.array([np.pi * 0.99, 0.0, 0.0])), np.zeros(3))

    with pytest.raises(SceneError, match="away"):
        render_view(scene, flipped, K, SHAPE)


def test_feature_render_channels(scene: Scene, K: Intrinsics) -> None:
    features = render_features(scene, PoseSE3.identity(), K, SHAPE, channels=2)

    assert features.shape == SHAPE
    assert features.channels == 2


# =========================
# Ground-truth flow
# =========================


def test_same_pose_has_zero_flow(scene: Scene, K: Intrinsics) -> None:
    flow, occlusion = ground_truth_flow(scene, PoseSE3.identity(), PoseSE3.identity(), K, SHAPE)

    np.testing.assert_allclose(flow.data, 0.0, atol=1e-9)
    assert occlusion.count() == 0


def test_plane_translation_flow(plane: Scene, K: Intrinsics) -> None:
    tx = 0.3
    moved = PoseSE3(np.eye(3), np.array([-tx, 0.0, 0.0]))

    flow, occlusion = ground_truth_flow(plane, PoseSE3.identity(), moved, K, SHAPE)

    np.testing.assert_allclose(flow.data[..., 0], -K.fx * tx / 6.0, atol=1e-9)
    np.testing.assert_allclose(flow.data[..., 1], 0.0, atol=1e-9)
    # points leaving through the left border are occluded
    assert occlusion.binary(0.5)[:, 0].all()
    assert not occlusion.binary(0.5)[:, -1].any()


def test_flow_agrees_with_reprojection(full_bundle: TripletBundle) -> None:
    b = full_bundle
    for source in (-2, 2):
        coords = reproject_map(b.depths[0], b.relative_pose(0, source), b.K).coords
        landing = pixel_lattice(*b.shape) + b.flows[(0, source)].data
        visible = ~b.occlusions[(0, source)].binary(0.5)
        assert visible.mean() > 0.5
        np.testing.assert_allclose(coords[visible], landing[visible], atol=1e-6)


def test_flow_warp_reproduces_view(full_bundle: TripletBundle) -> None:
    b = full_bundle
    for source in (-2, 2):
        warped, _ = backward_warp(b.images[source], b.flows[(0, source)])
        visible = ~b.occlusions[(0, source)].binary(0.5)
        error = np.abs(warped.data - b.images[0].data).mean(axis=-1)
        assert error[visible].mean() < 0.01
