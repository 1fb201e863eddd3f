import numpy as np
import pytest
from vifidepth.geometry.camera import Intrinsics, PoseSE3
from vifidepth.geometry.imgrid import ImageGrid, ValidityMask
from vifidepth.losses.photometric import (
    PhotoConfig,
    PhotometricError,
    auto_mask,
    min_reprojection,
    photometric_error,
    photometric_map,
    self_supervised_loss,
    smoothness_loss,
    smoothness_term,
    ssim_map,
)
from vifidepth.optim.gradcheck import check_gradient
from vifidepth.scene.bundle import TripletBundle

CFG = PhotoConfig()
SOURCES = (-2, 2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(11)


def brute_force_ssim(x: np.ndarray, y: np.ndarray, cfg: PhotoConfig) -> np.ndarray:
    r = cfg.ssim_window // 2
    px = np.pad(x, r, mode="edge")
    py = np.pad(y, r, mode="edge")
    out = np.zeros(x.shape)
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            wx = px[i : i + cfg.ssim_window, j : j + cfg.ssim_window]
            wy = py[i : i + cfg.ssim_window, j : j + cfg.ssim_window]
            mx, my = wx.mean(), wy.mean()
            vx = (wx * wx).mean() - mx * mx
            vy = (wy * wy).mean() - my * my
            cxy = (wx * wy).mean() - mx * my
            out[i, j] = ((2 * mx * my + cfg.c1) * (2 * cxy + cfg.c2)) / (
                (mx * mx + my * my + cfg.c1) * (vx + vy + cfg.c2)
            )
    return out


# =========================
# SSIM and photometric error
# =========================


def test_ssim_of_identical_images_is_one(rng: np.random.Generator) -> None:
    image = ImageGrid(rng.uniform(size=(6, 7, 3)))

    np.testing.assert_array_equal(ssim_map(image, image, CFG).plane(), 1.0)


def test_ssim_of_constant_pair() -> None:
    s = ssim_map(ImageGrid.full(5, 5, 0.3), ImageGrid.full(5, 5, 0.5), CFG).plane()

    np.testing.assert_allclose(s, 0.3001 / 0.3401, rtol=1e-9)


def test_ssim_is_symmetric(rng: np.random.Generator) -> None:
    a = ImageGrid(rng.uniform(size=(6, 6)))
    b = ImageGrid(rng.uniform(size=(6, 6)))

    np.testing.assert_allclose(ssim_map(a, b, CFG).data, ssim_map(b, a, CFG).data, atol=1e-14)


def test_ssim_matches_windowed_brute_force(rng: np.random.Generator) -> None:
    x = rng.uniform(size=(8, 8))
    y = np.clip(x + rng.normal(0.0, 0.1, size=(8, 8)), 0.0, 1.0)

    fast = ssim_map(ImageGrid(x), ImageGrid(y), CFG).plane()

    np.testing.assert_allclose(fast, brute_force_ssim(x, y, CFG), atol=1e-12)


def test_photometric_error_examples(rng: np.random.Generator) -> None:
    image = ImageGrid(rng.uniform(size=(5, 6, 3)))

    assert not photometric_error(image, image, CFG).data.any()
    const = photometric_error(ImageGrid.full(5, 5, 0.3), ImageGrid.full(5, 5, 0.5), CFG).plane()
    np.testing.assert_allclose(const, 0.425 * (1 - 0.3001 / 0.3401) + 0.15 * 0.2, rtol=1e-9)
    assert const[0, 0] == pytest.approx(0.07998, abs=1e-5)


def test_photometric_error_rejects_shape_mismatch() -> None:
    with pytest.raises(PhotometricError):
        photometric_error(ImageGrid.full(4, 4, 0.0), ImageGrid.full(4, 5, 0.0), CFG)


def test_photometric_vjp_matches_finite_differences(rng: np.random.Generator) -> None:
    target = ImageGrid(rng.uniform(size=(5, 6, 2)))
    rec = rng.uniform(size=(5, 6, 2))
    g = rng.normal(size=(5, 6))
    h = 1e-6

    analytic = photometric_map(target, ImageGrid(rec), CFG).vjp(g)

    numeric = np.zeros_like(rec)
    for index in np.ndindex(rec.shape):
        plus, minus = rec.copy(), rec.copy()
        plus[index] += h
        minus[index] -= h
        fp = np.sum(g * photometric_map(target, ImageGrid(plus), CFG).error)
        fm = np.sum(g * photometric_map(target, ImageGrid(minus), CFG).error)
        numeric[index] = (fp - fm) / (2 * h)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)


# =========================
# Min reprojection and auto-masking
# =========================


def test_min_reprojection_single_and_perfect(rng: np.random.Generator) -> None:
    target = ImageGrid(rng.uniform(size=(5, 5, 3)))
    other = ImageGrid(rng.uniform(size=(5, 5, 3)))
    full = ValidityMask.all_valid(5, 5)

    single, valid = min_reprojection(target, [(other, full)], CFG)
    np.testing.assert_array_equal(single.data, photometric_error(target, other, CFG).data)
    assert valid.count() == 25

    best, _ = min_reprojection(target, [(other, full), (target, full)], CFG)
    assert not best.data.any()


def test_min_reprojection_matches_brute_force(rng: np.random.Generator) -> None:
    target = ImageGrid(rng.uniform(size=(6, 6)))
    recs = []
    for _ in range(3):
        mask = ValidityMask.from_bool(rng.uniform(size=(6, 6)) > 0.3)
        recs.append((ImageGrid(rng.uniform(size=(6, 6))), mask))

    error, valid = min_reprojection(target, recs, CFG)

    errors = [photometric_error(target, rec, CFG).plane() for rec, _ in recs]
    for i, j in np.ndindex(6, 6):
        candidates = [e[i, j] for e, (_, m) in zip(errors, recs) if m.binary()[i, j]]
        assert valid.binary()[i, j] == bool(candidates)
        assert error.plane()[i, j] == (min(candidates) if candidates else 0.0)


def test_min_reprojection_needs_a_reconstruction() -> None:
    with pytest.raises(PhotometricError):
        min_reprojection(ImageGrid.full(2, 2, 0.0), [], CFG)


def test_auto_mask_static_and_perfect(rng: np.random.Generator) -> None:
    target = ImageGrid(rng.uniform(size=(5, 5, 3)))
    full = ValidityMask.all_valid(5, 5)

    # a static camera: the unwarped source is already perfect, ties are masked out
    assert auto_mask(target, [target], [(target, full)], CFG).count() == 0

    shifted = ImageGrid(np.roll(target.data, 1, axis=1))
    assert auto_mask(target, [shifted], [(target, full)], CFG).count() == 25


def test_auto_mask_rejects_misaligned_lists() -> None:
    grid = ImageGrid.full(3, 3, 0.5)

    with pytest.raises(PhotometricError):
        auto_mask(grid, [grid, grid], [(grid, ValidityMask.all_valid(3, 3))], CFG)


# =========================
# Smoothness
# =========================


def test_smoothness_of_constant_depth_is_zero(rng: np.random.Generator) -> None:
    assert smoothness_loss(ImageGrid.full(4, 5, 3.0), ImageGrid(rng.uniform(size=(4, 5, 3)))) == 0.0


def test_smoothness_step_is_attenuated_by_image_edge() -> None:
    depth = np.ones((4, 4))
    depth[:, 2:] = 2.0
    edge = np.zeros((4, 4))
    edge[:, 2:] = 0.5

    flat = smoothness_loss(ImageGrid(depth), ImageGrid.full(4, 4, 0.2))
    attenuated = smoothness_loss(ImageGrid(depth), ImageGrid(edge))

    # inverse depth 1 | 0.5 normalized by 0.75 jumps by 2/3 on four rows of sixteen pixels
    assert flat == pytest.approx(1.0 / 6.0, rel=1e-12)
    assert attenuated == pytest.approx(np.exp(-0.5) / 6.0, rel=1e-12)


def test_smoothness_is_scale_invariant(rng: np.random.Generator) -> None:
    depth = ImageGrid(rng.uniform(1.0, 5.0, size=(5, 6)))
    image = ImageGrid(rng.uniform(size=(5, 6, 3)))

    assert smoothness_loss(ImageGrid(3.0 * depth.data), image) == pytest.approx(smoothness_loss(depth, image))


def test_smoothness_gradient_matches_finite_differences(rng: np.random.Generator) -> None:
    depth = rng.uniform(1.0, 5.0, size=(5, 6))
    image = ImageGrid(rng.uniform(size=(5, 6, 3)))
    h = 1e-6

    analytic = smoothness_term(ImageGrid(depth), image).vjp()

    for index in np.ndindex(depth.shape):
        plus, minus = depth.copy(), depth.copy()
        plus[index] += h
        minus[index] -= h
        numeric = (smoothness_loss(ImageGrid(plus), image) - smoothness_loss(ImageGrid(minus), image)) / (2 * h)
        assert analytic[index] == pytest.approx(numeric, rel=1e-5, abs=1e-9)


def test_smoothness_rejects_non_positive_depth() -> None:
    depth = np.ones((3, 3))
    depth[1, 1] = 0.0

    with pytest.raises(PhotometricError):
        smoothness_loss(ImageGrid(depth), ImageGrid.full(3, 3, 0.5))


# =========================
# Self-supervised loss
# =========================


def test_static_sources_leave_only_smoothness(rng: np.random.Generator) -> None:
    image = ImageGrid(rng.uniform(size=(6, 8, 3)))
    depth = ImageGrid(rng.uniform(2.0, 6.0, size=(6, 8)))
    poses = [PoseSE3.identity(), PoseSE3.identity()]

    result = self_supervised_loss(depth, poses, image, [image, image], Intrinsics.for_shape(6, 8), CFG)

    assert result.breakdown.photometric == 0.0
    assert result.breakdown.masked_fraction == 1.0
    assert result.breakdown.total == pytest.approx(CFG.gamma * smoothness_loss(depth, image))


def test_pose_count_must_match_sources() -> None:
    grid = ImageGrid.full(3, 3, 0.5)

    with pytest.raises(PhotometricError):
        self_supervised_loss(grid, [PoseSE3.identity()], grid, [grid, grid], Intrinsics.for_shape(3, 3), CFG)


def test_ground_truth_reconstructs_target(full_bundle: TripletBundle) -> None:
    poses = [full_bundle.relative_pose(0, s) for s in SOURCES]
    sources = [full_bundle.images[s] for s in SOURCES]

    result = self_supervised_loss(full_bundle.depths[0], poses, full_bundle.images[0], sources, full_bundle.K, CFG)

    target = full_bundle.images[0].data
    for s, view in zip(SOURCES, result.views):
        covisible = view.valid & ~full_bundle.occlusions[(0, s)].binary(0.5)
        assert covisible.mean() > 0.5
        error = np.abs(view.sample.image.data - target).mean(axis=-1)
        assert error[covisible].mean() < 0.01


def test_ground_truth_beats_wrong_scale(full_bundle: TripletBundle) -> None:
    poses = [full_bundle.relative_pose(0, s) for s in SOURCES]
    sources = [full_bundle.images[s] for s in SOURCES]
    target = full_bundle.images[0]

    def loss(depth: ImageGrid) -> float:
        result = self_supervised_loss(depth, poses, target, sources, full_bundle.K, CFG, auto_masking=False)
        return result.breakdown.photometric

    truth = full_bundle.depths[0]
    assert loss(truth) < loss(ImageGrid(1.5 * truth.data))


def test_depth_gradient_matches_finite_differences(small_bundle: TripletBundle) -> None:
    rng = np.random.default_rng(5)
    poses = [small_bundle.relative_pose(0, s) for s in SOURCES]
    sources = [small_bundle.images[s] for s in SOURCES]
    shape = small_bundle.shape
    x0 = (small_bundle.depths[0].plane() * np.exp(rng.uniform(-0.1, 0.1, size=shape))).ravel()

    def fn(x: np.ndarray) -> tuple[float, np.ndarray, tuple[np.ndarray, ...]]:
        result = self_supervised_loss(
            ImageGrid(x.reshape(shape)), poses, small_bundle.images[0], sources, small_bundle.K, CFG
        )
        d_depth, _ = result.vjp()
        return result.breakdown.total, d_depth.ravel(), result.branch_state()

    report = check_gradient("self_supervised_depth", fn, x0, coords=40)

    assert report.entries
    assert report.passed, report.max_rel_err
