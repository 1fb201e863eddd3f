import math

import numpy as np
import pytest
from vifidepth.geometry.affine import (
    MAX_ROTATION_DEG,
    AffineError,
    AffineParams,
    RectificationMatrix,
    affine_depth_value,
    affine_image,
    affine_inverse_depth,
    affine_pixel,
    affine_pixel_inverse,
    rectification_matrix,
    rectified_pose_vjp,
    rectify_pose,
    sample_aug_params,
)
from vifidepth.geometry.camera import Intrinsics, PoseParams, backproject, pose_from_params, project, transform_point
from vifidepth.geometry.imgrid import ImageGrid, pixel_lattice

SHAPE = (24, 32)


@pytest.fixture
def K() -> Intrinsics:
    return Intrinsics.for_shape(*SHAPE)


def smooth_depth(shape: tuple[int, int]) -> np.ndarray:
    ys, xs = np.mgrid[0 : shape[0], 0 : shape[1]].astype(np.float64)
    return 10.0 + 0.5 * np.sin(2 * np.pi * xs / 48.0) + 0.3 * np.cos(2 * np.pi * ys / 40.0)


# =========================
# Parameters
# =========================


def test_params_validate_ranges() -> None:
    with pytest.raises(ValueError):
        AffineParams(height=4, width=4, scale=0.9, crop_x=1.5, crop_y=1.5)
    with pytest.raises(ValueError):
        AffineParams(height=4, width=4, theta=4.0, crop_x=1.5, crop_y=1.5)


def test_image_center_uses_pixel_centers() -> None:
    assert AffineParams.identity(SHAPE).image_center == (15.5, 11.5)


# =========================
# Pixel maps
# =========================


def test_identity_pixel_map() -> None:
    pts = pixel_lattice(*SHAPE)

    np.testing.assert_array_equal(affine_pixel(AffineParams.identity(SHAPE), pts), pts)


def test_centered_zoom_pixel_map() -> None:
    params = AffineParams.centered(SHAPE, scale=2.0)
    cx, cy = params.image_center

    x, y = affine_pixel(params, (3.0, 20.0))

    assert (x, y) == pytest.approx((2 * (3.0 - cx) + cx, 2 * (20.0 - cy) + cy))


def test_quarter_turn_about_center() -> None:
    params = AffineParams.centered(SHAPE, theta=math.pi / 2)
    cx, cy = params.image_center

    # counterclockwise on screen: right of center goes up (y points down)
    np.testing.assert_allclose(affine_pixel(params, (cx + 1.0, cy)), (cx, cy - 1.0), atol=1e-12)
    np.testing.assert_allclose(affine_pixel(params, (cx, cy - 1.0)), (cx - 1.0, cy), atol=1e-12)


def test_pixel_inverse_round_trip() -> None:
    rng = np.random.default_rng(0)
    params = sample_aug_params(rng, SHAPE)
    pts = rng.uniform(-5, 40, size=(10, 2))

    np.testing.assert_allclose(affine_pixel_inverse(params, affine_pixel(params, pts)), pts, atol=1e-12)


# =========================
# Dense warps
# =========================


def test_identity_affine_image(K: Intrinsics) -> None:
    image = ImageGrid(np.random.default_rng(1).uniform(size=SHAPE + (3,)))

    warp = affine_image(image, AffineParams.identity(SHAPE))

    np.testing.assert_allclose(warp.grid.data, image.data, atol=1e-12)
    assert warp.mask.count() == SHAPE[0] * SHAPE[1]


def test_centered_zoom_halves_ramp_slope() -> None:
    ramp = np.tile(np.arange(SHAPE[1], dtype=np.float64), (SHAPE[0], 1))
    params = AffineParams.centered(SHAPE, scale=2.0)
    cx = params.image_center[0]

    warp = affine_image(ImageGrid(ramp), params)

    expected = (np.arange(SHAPE[1]) - cx) / 2.0 + cx
    np.testing.assert_allclose(warp.grid.plane(), np.tile(expected, (SHAPE[0], 1)), atol=1e-12)
    assert warp.mask.count() == SHAPE[0] * SHAPE[1]


def test_rotation_invalidates_corners() -> None:
    params = AffineParams.centered(SHAPE, theta=math.radians(5.0))

    valid = affine_image(ImageGrid.full(*SHAPE, 1.0), params).mask.binary()

    h, w = SHAPE
    assert not any(valid[y, x] for y, x in ((0, 0), (0, w - 1), (h - 1, 0), (h - 1, w - 1)))
    assert valid[h // 2, w // 2]


def test_shape_must_match_params() -> None:
    with pytest.raises(AffineError):
        affine_image(ImageGrid.full(4, 4, 1.0), AffineParams.identity(SHAPE))


def test_depth_value_scaling() -> None:
    assert affine_depth_value(10.0, 2.0) == 5.0
    assert affine_depth_value(7.0, 1.0) == 7.0
    for d in (0.3, 1.7, 42.0):
        assert affine_depth_value(d, 1.6) * 1.6 == pytest.approx(d, rel=1e-15)
    with pytest.raises(AffineError):
        affine_depth_value(0.0, 2.0)


def test_identity_inverse_depth() -> None:
    depth = ImageGrid(smooth_depth(SHAPE))

    restored = affine_inverse_depth(depth, AffineParams.identity(SHAPE))

    np.testing.assert_allclose(restored.grid.data, depth.data, atol=1e-12)
    assert restored.mask.count() == SHAPE[0] * SHAPE[1]


def test_centered_zoom_coverage_is_central_window() -> None:
    params = AffineParams.centered(SHAPE, scale=2.0)
    cx, cy = params.image_center
    h, w = SHAPE

    mask = affine_inverse_depth(ImageGrid.full(h, w, 5.0), params).mask.binary()

    ys, xs = np.mgrid[0:h, 0:w]
    expected = (np.abs(xs - cx) <= (w - 1) / 4.0) & (np.abs(ys - cy) <= (h - 1) / 4.0)
    np.testing.assert_array_equal(mask, expected)


def test_depth_round_trip_through_augmentation() -> None:
    depth = smooth_depth(SHAPE)
    params = AffineParams.centered(SHAPE, scale=2.0, theta=math.radians(3.0))

    augmented = affine_image(ImageGrid(depth), params).grid.data / params.scale
    restored = affine_inverse_depth(ImageGrid(augmented), params)

    valid = restored.mask.binary()
    rel = np.abs(params.scale * restored.grid.plane() - depth) / depth
    assert valid.sum() > 0
    assert rel[valid].max() < 1e-3


# =========================
# Rectification
# =========================


def test_identity_rectification(K: Intrinsics) -> None:
    np.testing.assert_allclose(rectification_matrix(K, AffineParams.identity(SHAPE)).matrix, np.eye(3), atol=1e-12)


def test_non_identity_params_move_rectification(K: Intrinsics) -> None:
    for params in (
        AffineParams.centered(SHAPE, scale=1.2),
        AffineParams.centered(SHAPE, theta=0.01),
        AffineParams(height=SHAPE[0], width=SHAPE[1], crop_x=14.0, crop_y=11.5),
    ):
        assert np.max(np.abs(rectification_matrix(K, params).matrix - np.eye(3))) > 1e-6


def test_centered_zoom_rectification(K: Intrinsics) -> None:
    R_c = rectification_matrix(K, AffineParams.centered(SHAPE, scale=2.0))

    np.testing.assert_allclose(R_c.matrix, np.diag([1.0, 1.0, 0.5]), atol=1e-12)


def test_defining_property_over_random_cases() -> None:
    rng = np.random.default_rng(2)
    for _ in range(1000):
        K = Intrinsics(fx=rng.uniform(20, 80), fy=rng.uniform(20, 80), cx=rng.uniform(12, 20), cy=rng.uniform(9, 14))
        params = sample_aug_params(rng, SHAPE)
        pixel = (rng.uniform(0, SHAPE[1] - 1), rng.uniform(0, SHAPE[0] - 1))
        P = backproject(pixel, rng.uniform(1.0, 50.0), K)
        R_c = rectification_matrix(K, params)

        P_aug = R_c.matrix @ P
        assert P_aug[2] == pytest.approx(P[2] / params.scale, rel=1e-12)
        np.testing.assert_allclose(project(P_aug, K), affine_pixel(params, project(P, K)), rtol=1e-9, atol=1e-9)


def test_singular_rectification_is_rejected() -> None:
    with pytest.raises(AffineError):
        RectificationMatrix(np.zeros((3, 3)))


def test_rectify_pose_identity() -> None:
    T = pose_from_params(PoseParams(np.array([0.1, 0.2, -0.1]), np.array([1.0, 2.0, 3.0])))

    rect = rectify_pose(T, RectificationMatrix(np.eye(3)))

    np.testing.assert_allclose(rect.matrix, T.rotation, atol=1e-15)
    np.testing.assert_array_equal(rect.translation, T.translation)


def test_rectify_pose_centered_zoom(K: Intrinsics) -> None:
    R_c = rectification_matrix(K, AffineParams.centered(SHAPE, scale=2.0))
    T = pose_from_params(PoseParams(np.zeros(3), np.array([0.0, 0.0, 1.0])))

    np.testing.assert_allclose(rectify_pose(T, R_c).translation, [0.0, 0.0, 0.5], atol=1e-12)


def test_rectified_pose_maps_augmented_points(K: Intrinsics) -> None:
    rng = np.random.default_rng(3)
    for _ in range(50):
        params = sample_aug_params(rng, SHAPE)
        R_c = rectification_matrix(K, params)
        T = pose_from_params(PoseParams(rng.normal(size=3) * 0.1, rng.normal(size=3)))
        P_t = rng.normal(size=3) + np.array([0.0, 0.0, 8.0])
        P_s = transform_point(T, P_t)

        rect = rectify_pose(T, R_c)

        np.testing.assert_allclose(transform_point(rect, R_c.matrix @ P_t), R_c.matrix @ P_s, atol=1e-9)


def test_rectified_pose_vjp_is_adjoint(K: Intrinsics) -> None:
    rng = np.random.default_rng(4)
    R_c = rectification_matrix(K, sample_aug_params(rng, SHAPE))
    M, t = rng.normal(size=(3, 3)), rng.normal(size=3)
    A, b = rng.normal(size=(3, 3)), rng.normal(size=3)

    d_M, d_t = rectified_pose_vjp(R_c, A, b)

    # <A, R_c M R_c^-1> + <b, R_c t> is linear in (M, t)
    lhs = np.sum(A * (R_c.matrix @ M @ R_c.inverse)) + b @ (R_c.matrix @ t)
    assert np.sum(d_M * M) + d_t @ t == pytest.approx(lhs, rel=1e-10)


# =========================
# Sampling
# =========================


def test_sampling_is_deterministic() -> None:
    a = [sample_aug_params(np.random.default_rng(9), SHAPE) for _ in range(2)]

    assert a[0] == a[1]


def test_sampling_ranges_and_containment() -> None:
    rng = np.random.default_rng(5)
    h, w = SHAPE
    corners = np.array([[0.0, 0.0], [w - 1.0, 0.0], [0.0, h - 1.0], [w - 1.0, h - 1.0]])
    scales, thetas = [], []
    for _ in range(10_000):
        params = sample_aug_params(rng, SHAPE)
        scales.append(params.scale)
        thetas.append(params.theta)
        src = affine_pixel_inverse(params, corners)
        assert np.all(src >= -1e-9) and np.all(src <= np.array([w - 1, h - 1]) + 1e-9)

    assert min(scales) >= 1.2 and max(scales) <= 2.0
    assert max(abs(t) for t in thetas) <= math.radians(MAX_ROTATION_DEG)


def test_sampling_rejects_bad_scale_range() -> None:
    with pytest.raises(AffineError):
        sample_aug_params(np.random.default_rng(0), SHAPE, scale_range=(0.5, 2.0))
