import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation
from vifidepth.geometry.camera import (
    BehindCameraError,
    CameraError,
    Intrinsics,
    LinearPose,
    PoseParams,
    PoseSE3,
    backproject,
    pose_compose,
    pose_from_params,
    pose_inverse,
    pose_params_vjp,
    project,
    reproject_map,
    rotation_from_axis_angle,
    rotation_jacobian,
    transform_point,
)
from vifidepth.geometry.imgrid import ImageGrid, pixel_lattice


@pytest.fixture
def K() -> Intrinsics:
    return Intrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0)


def random_pose(rng: np.random.Generator) -> PoseSE3:
    return PoseSE3(Rotation.random(random_state=rng).as_matrix(), rng.normal(size=3))


# =========================
# Intrinsics
# =========================


def test_matrix_and_inverse(K: Intrinsics) -> None:
    np.testing.assert_allclose(K.matrix @ K.inverse, np.eye(3), atol=1e-12)
    assert K.matrix.tolist() == [[100.0, 0.0, 32.0], [0.0, 100.0, 24.0], [0.0, 0.0, 1.0]]


def test_focal_must_be_positive() -> None:
    with pytest.raises(ValueError):
        Intrinsics(fx=0.0, fy=1.0, cx=0.0, cy=0.0)


def test_for_shape_centers_principal_point() -> None:
    K = Intrinsics.for_shape(48, 64)

    assert (K.cx, K.cy) == (31.5, 23.5)
    assert K.fx == pytest.approx(0.9 * 64)


def test_rescaled_keeps_rays_through_pixel_centers() -> None:
    K = Intrinsics.for_shape(48, 64)

    half = K.rescaled((48, 64), (24, 32))

    assert half.fx == pytest.approx(K.fx / 2)
    assert (half.cx, half.cy) == pytest.approx((15.5, 11.5))
    # the full-resolution optical axis lands on the half-resolution optical axis
    P = backproject((K.cx, K.cy), 5.0, K)
    assert project(P, half) == pytest.approx((half.cx, half.cy))


# =========================
# Point operations
# =========================


@pytest.mark.parametrize(
    ("point", "pixel"),
    [((0.0, 0.0, 5.0), (32.0, 24.0)), ((1.0, 0.0, 5.0), (52.0, 24.0)), ((0.5, -0.25, 2.0), (57.0, 11.5))],
)
def test_project_examples(K: Intrinsics, point: tuple[float, float, float], pixel: tuple[float, float]) -> None:
    assert project(np.array(point), K) == pytest.approx(pixel, abs=1e-12)


def test_project_behind_camera(K: Intrinsics) -> None:
    with pytest.raises(BehindCameraError):
        project(np.array([0.0, 0.0, 0.0]), K)
    with pytest.raises(CameraError):
        project(np.array([1.0, 1.0, -2.0]), K)


def test_backproject_examples(K: Intrinsics) -> None:
    np.testing.assert_allclose(backproject((32.0, 24.0), 5.0, K), [0.0, 0.0, 5.0])
    np.testing.assert_allclose(backproject((52.0, 24.0), 5.0, K), [1.0, 0.0, 5.0])


def test_backproject_rejects_non_positive_depth(K: Intrinsics) -> None:
    with pytest.raises(CameraError):
        backproject((1.0, 1.0), 0.0, K)


def test_project_backproject_round_trip() -> None:
    rng = np.random.default_rng(0)
    for _ in range(1000):
        K = Intrinsics(fx=rng.uniform(20, 200), fy=rng.uniform(20, 200), cx=rng.uniform(0, 64), cy=rng.uniform(0, 48))
        pixel = (rng.uniform(0, 64), rng.uniform(0, 48))
        back = project(backproject(pixel, rng.uniform(0.1, 100), K), K)
        assert back == pytest.approx(pixel, abs=1e-9)


def test_transform_point_examples() -> None:
    P = np.array([0.0, 0.0, 5.0])

    np.testing.assert_array_equal(transform_point(PoseSE3.identity(), P), P)
    np.testing.assert_array_equal(transform_point(PoseSE3(np.eye(3), np.array([1.0, 0.0, 0.0])), P), [1.0, 0.0, 5.0])


def test_linear_pose_transform() -> None:
    M = np.diag([1.0, 2.0, 0.5])
    T = LinearPose(M, np.array([0.0, 1.0, 0.0]))

    np.testing.assert_allclose(transform_point(T, np.array([1.0, 1.0, 2.0])), [1.0, 3.0, 1.0])


# =========================
# Pose algebra
# =========================


def test_compose_with_inverse_is_identity() -> None:
    rng = np.random.default_rng(1)
    for _ in range(1000):
        T = random_pose(rng)
        ident = pose_compose(T, pose_inverse(T))
        np.testing.assert_allclose(ident.rotation, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(ident.translation, np.zeros(3), atol=1e-10)


def test_compose_then_inverse_on_points() -> None:
    rng = np.random.default_rng(2)
    for _ in range(100):
        T = random_pose(rng)
        P = rng.normal(size=3) * 10
        np.testing.assert_allclose(transform_point(pose_compose(T, pose_inverse(T)), P), P, atol=1e-10)


def test_rotation_must_be_orthonormal() -> None:
    with pytest.raises(CameraError):
        PoseSE3(np.diag([1.0, 1.0, 1.1]), np.zeros(3))
    with pytest.raises(CameraError):
        PoseSE3(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_zero_axis_angle_is_identity() -> None:
    np.testing.assert_array_equal(pose_from_params(PoseParams.zero()).rotation, np.eye(3))


def test_quarter_turn_about_z() -> None:
    T = pose_from_params(PoseParams(np.array([0.0, 0.0, math.pi / 2])))

    np.testing.assert_allclose(T.rotation @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], atol=1e-12)


def test_axis_angle_principal_branch() -> None:
    with pytest.raises(CameraError):
        PoseParams(np.array([math.pi, 0.0, 0.0]))


def test_params_round_trip_through_pose() -> None:
    p = PoseParams(np.array([0.1, -0.2, 0.3]), np.array([1.0, 2.0, 3.0]))

    q = PoseParams.from_pose(pose_from_params(p))

    np.testing.assert_allclose(q.as_vector(), p.as_vector(), atol=1e-12)
    np.testing.assert_array_equal(PoseParams.from_vector(p.as_vector()).as_vector(), p.as_vector())


def test_read_only_inputs_convert() -> None:
    omega = np.array([0.0, 0.0, math.pi / 2])
    omega.setflags(write=False)
    p = PoseParams(omega, np.array([1.0, 0.0, 0.0]))
    assert not p.axis_angle.flags.writeable

    T = pose_from_params(p)

    assert not T.rotation.flags.writeable
    np.testing.assert_allclose(rotation_from_axis_angle(omega) @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(PoseParams.from_pose(T).as_vector(), p.as_vector(), atol=1e-12)


@pytest.mark.parametrize("scale", [1e-7, 1e-3, 1.0, 2.5])
def test_rotation_jacobian_matches_finite_differences(scale: float) -> None:
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(25):
        direction = rng.normal(size=3)
        omega = direction / np.linalg.norm(direction) * scale
        jac = rotation_jacobian(omega)
        for i in range(3):
            step = np.zeros(3)
            step[i] = h
            numeric = (
                Rotation.from_rotvec(omega + step).as_matrix() - Rotation.from_rotvec(omega - step).as_matrix()
            ) / (2 * h)
            err = np.max(np.abs(jac[i] - numeric)) / max(np.max(np.abs(numeric)), 1e-12)
            assert err < 1e-6


def test_pose_params_vjp_contracts_jacobian() -> None:
    rng = np.random.default_rng(4)
    p = PoseParams(rng.normal(size=3) * 0.3, rng.normal(size=3))
    d_linear = rng.normal(size=(3, 3))
    d_t = rng.normal(size=3)

    grad = pose_params_vjp(p, d_linear, d_t)

    jac = rotation_jacobian(p.axis_angle)
    expected = [float(np.sum(jac[i] * d_linear)) for i in range(3)]
    np.testing.assert_allclose(grad[:3], expected)
    np.testing.assert_array_equal(grad[3:], d_t)


# =========================
# Dense reprojection
# =========================


def test_identity_pose_reprojects_onto_lattice(K: Intrinsics) -> None:
    rng = np.random.default_rng(5)
    depth = ImageGrid(rng.uniform(1.0, 10.0, size=(6, 8)))

    result = reproject_map(depth, PoseSE3.identity(), K)

    np.testing.assert_allclose(result.coords, pixel_lattice(6, 8), atol=1e-12)
    assert result.mask.count() == 48


def test_plane_parallax_shift(K: Intrinsics) -> None:
    Z, tx = 4.0, 0.2
    # camera moves +tx, so target points move -tx in the source frame
    T = PoseSE3(np.eye(3), np.array([-tx, 0.0, 0.0]))

    result = reproject_map(ImageGrid.full(5, 7, Z), T, K)

    shift = result.coords - pixel_lattice(5, 7)
    np.testing.assert_allclose(shift[..., 0], -K.fx * tx / Z, atol=1e-12)
    np.testing.assert_allclose(shift[..., 1], 0.0, atol=1e-12)


def test_points_behind_source_are_invalid(K: Intrinsics) -> None:
    T = PoseSE3(np.eye(3), np.array([0.0, 0.0, -3.0]))
    depth = np.full((4, 4), 5.0)
    depth[:, :2] = 2.0

    result = reproject_map(ImageGrid(depth), T, K)

    assert not result.visible[:, :2].any()
    assert result.visible[:, 2:].all()
    np.testing.assert_array_equal(result.coords[:, :2], -1.0)


def test_reproject_rejects_non_positive_depth(K: Intrinsics) -> None:
    with pytest.raises(CameraError):
        reproject_map(ImageGrid(np.array([[1.0, 0.0]])), PoseSE3.identity(), K)


def test_depth_jacobian_matches_finite_differences(K: Intrinsics) -> None:
    rng = np.random.default_rng(6)
    depth = rng.uniform(2.0, 8.0, size=(4, 5))
    T = pose_from_params(PoseParams(np.array([0.02, -0.03, 0.01]), np.array([0.3, -0.1, 0.2])))
    h = 1e-6

    analytic = reproject_map(ImageGrid(depth), T, K).d_coords_d_depth()
    plus = reproject_map(ImageGrid(depth + h), T, K).coords
    minus = reproject_map(ImageGrid(depth - h), T, K).coords
    numeric = (plus - minus) / (2 * h)

    np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-7)


def test_pose_vjp_matches_finite_differences(K: Intrinsics) -> None:
    rng = np.random.default_rng(7)
    depth = ImageGrid(rng.uniform(2.0, 8.0, size=(3, 4)))
    p = PoseParams(np.array([0.02, -0.03, 0.01]), np.array([0.3, -0.1, 0.2]))
    g = rng.normal(size=(3, 4, 2))

    result = reproject_map(depth, pose_from_params(p), K)
    d_linear, d_t = result.vjp_pose(g)
    grad = pose_params_vjp(p, d_linear, d_t)

    def f(vec: np.ndarray) -> float:
        return float(np.sum(g * reproject_map(depth, pose_from_params(PoseParams.from_vector(vec)), K).coords))

    h = 1e-6
    for i in range(6):
        step = np.zeros(6)
        step[i] = h
        numeric = (f(p.as_vector() + step) - f(p.as_vector() - step)) / (2 * h)
        assert grad[i] == pytest.approx(numeric, rel=1e-5, abs=1e-6)
