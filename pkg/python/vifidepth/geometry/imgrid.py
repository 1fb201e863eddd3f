"""Dense 2D grids of real samples and the operators built on them.

Coordinate convention: pixel centers sit at integer coordinates, origin at the
top-left, ``x`` grows rightward and ``y`` downward. Coordinate arrays have
shape ``(H, W, 2)`` with ``[..., 0] = x`` and ``[..., 1] = y``.

Every operator here that the losses differentiate through exposes its
adjoint (vector-Jacobian product), so reverse-mode gradients can be chained
without an autodiff framework.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from scipy import ndimage

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.intp]
BoolArray = npt.NDArray[np.bool_]

# Soft coverage at or above this counts as valid for hard masks.
MASK_THRESHOLD = 0.999


class GridError(ValueError):
    """Raised when a grid or coordinate array is malformed."""


# =========================
# Types
# =========================


def _frozen(array: FloatArray) -> FloatArray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class ImageGrid:
    """``H x W x C`` field of finite float64 samples.

    Two-dimensional input is promoted to a single channel. The stored array
    is a private read-only copy.
    """

    data: FloatArray

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[..., None]
        if arr.ndim != 3:
            raise GridError(f"ImageGrid expects (H, W) or (H, W, C) data, got shape {arr.shape}")
        if 0 in arr.shape:
            raise GridError(f"ImageGrid must be non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise GridError("ImageGrid samples must be finite")
        object.__setattr__(self, "data", _frozen(arr))

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    @property
    def shape(self) -> tuple[int, int]:
        """Spatial shape ``(H, W)``."""
        return (self.height, self.width)

    @classmethod
    def full(cls, height: int, width: int, value: float, channels: int = 1) -> ImageGrid:
        return cls(np.full((height, width, channels), value, dtype=np.float64))

    def plane(self) -> FloatArray:
        """Return the single channel as an ``(H, W)`` view.

        Raises:
            GridError: If the grid has more than one channel.
        """
        if self.channels != 1:
            raise GridError(f"Expected a 1-channel grid, got {self.channels} channels")
        return self.data[..., 0]


@dataclass(frozen=True)
class ValidityMask:
    """Per-pixel validity in [0, 1]; binary masks hold only 0 and 1."""

    values: FloatArray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[..., 0]
        if arr.ndim != 2:
            raise GridError(f"ValidityMask expects (H, W) values, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < 0.0 or arr.max(initial=0.0) > 1.0:
            raise GridError("ValidityMask values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.values.shape[0]), int(self.values.shape[1]))

    @classmethod
    def all_valid(cls, height: int, width: int) -> ValidityMask:
        return cls(np.ones((height, width)))

    @classmethod
    def from_bool(cls, valid: BoolArray) -> ValidityMask:
        return cls(np.asarray(valid, dtype=np.float64))

    def binary(self, threshold: float = MASK_THRESHOLD) -> BoolArray:
        """Hard mask: ``True`` where the value is at least ``threshold``."""
        return self.values >= threshold

    def count(self) -> int:
        """Number of hard-valid pixels."""
        return int(np.count_nonzero(self.binary()))

    def intersect(self, other: ValidityMask) -> ValidityMask:
        _require_same_shape(self.shape, other.shape, "mask intersection")
        return ValidityMask(np.minimum(self.values, other.values))


def _require_same_shape(a: tuple[int, ...], b: tuple[int, ...], what: str) -> None:
    if a != b:
        raise GridError(f"Shape mismatch in {what}: {a} vs {b}")


def require_same_shape(a: ImageGrid, b: ImageGrid, what: str) -> None:
    """Raise ``GridError`` unless two grids have identical ``(H, W, C)``."""
    _require_same_shape(a.data.shape, b.data.shape, what)


def pixel_lattice(height: int, width: int) -> FloatArray:
    """Integer pixel-center coordinates as an ``(H, W, 2)`` array."""
    ys, xs = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    return np.stack([xs, ys], axis=-1)


# =========================
# Bilinear sampling
# =========================


@dataclass(frozen=True)
class SampleResult:
    """Output of :func:`bilinear_sample` plus what its adjoints need.

    Attributes:
        image: Sampled values, shape ``(H', W', C)``.
        mask: 1 where the requested coordinate was inside the grid.
        d_dx: Partial derivative of each sample w.r.t. its ``x`` coordinate.
        d_dy: Partial derivative of each sample w.r.t. its ``y`` coordinate.
    """

    image: ImageGrid
    mask: ValidityMask
    d_dx: FloatArray
    d_dy: FloatArray
    grid_shape: tuple[int, int, int]
    x0: IntArray = field(repr=False)
    y0: IntArray = field(repr=False)
    x1: IntArray = field(repr=False)
    y1: IntArray = field(repr=False)
    fx: FloatArray = field(repr=False)
    fy: FloatArray = field(repr=False)

    def vjp_coords(self, g: FloatArray) -> FloatArray:
        """Pull an output cotangent ``(H', W', C)`` back to coordinates ``(H', W', 2)``."""
        return np.stack([np.sum(g * self.d_dx, axis=-1), np.sum(g * self.d_dy, axis=-1)], axis=-1)

    def vjp_grid(self, g: FloatArray) -> FloatArray:
        """Pull an output cotangent ``(H', W', C)`` back to the sampled grid ``(H, W, C)``."""
        out = np.zeros(self.grid_shape, dtype=np.float64)
        wx1 = self.fx[..., None]
        wy1 = self.fy[..., None]
        wx0 = 1.0 - wx1
        wy0 = 1.0 - wy1
        np.add.at(out, (self.y0, self.x0), wy0 * wx0 * g)
        np.add.at(out, (self.y0, self.x1), wy0 * wx1 * g)
        np.add.at(out, (self.y1, self.x0), wy1 * wx0 * g)
        np.add.at(out, (self.y1, self.x1), wy1 * wx1 * g)
        return out

    def cells(self) -> IntArray:
        """Top-left cell index of every sample; part of the branch state of a sampler."""
        return np.stack([self.x0, self.y0], axis=-1)


def _cell(coord: FloatArray, size: int) -> tuple[IntArray, IntArray, FloatArray]:
    clamped = np.clip(coord, 0.0, float(size - 1))
    if size == 1:
        zeros = np.zeros(coord.shape, dtype=np.intp)
        return zeros, zeros, np.zeros(coord.shape)
    lo = np.minimum(np.floor(clamped), size - 2).astype(np.intp)
    return lo, lo + 1, clamped - lo


def bilinear_sample(grid: ImageGrid, coords: FloatArray) -> SampleResult:
    """Sample ``grid`` at real-valued pixel coordinates.

    Coordinates outside ``[0, W-1] x [0, H-1]`` are clamped to the border and
    flagged invalid. Derivatives w.r.t. a clamped coordinate axis are zero.

    Args:
        grid: Grid to sample.
        coords: ``(H', W', 2)`` array of ``(x, y)`` positions.

    Returns:
        The samples, validity mask and partial derivatives.

    Raises:
        GridError: If ``coords`` is not an ``(H', W', 2)`` finite array.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 3 or coords.shape[2] != 2:
        raise GridError(f"coords must have shape (H, W, 2), got {coords.shape}")
    if not np.all(np.isfinite(coords)):
        raise GridError("coords must be finite")

    h, w = grid.shape
    x = coords[..., 0]
    y = coords[..., 1]
    in_x = (x >= 0.0) & (x <= w - 1)
    in_y = (y >= 0.0) & (y <= h - 1)

    x0, x1, fx = _cell(x, w)
    y0, y1, fy = _cell(y, h)

    g = grid.data
    v00 = g[y0, x0]
    v01 = g[y0, x1]
    v10 = g[y1, x0]
    v11 = g[y1, x1]
    ax = fx[..., None]
    ay = fy[..., None]
    # weighted form keeps integer coordinates exact, including the last row and column
    top = (1.0 - ax) * v00 + ax * v01
    bottom = (1.0 - ax) * v10 + ax * v11
    values = (1.0 - ay) * top + ay * bottom

    d_dx = ((1.0 - ay) * (v01 - v00) + ay * (v11 - v10)) * (in_x & (w > 1))[..., None]
    d_dy = (bottom - top) * (in_y & (h > 1))[..., None]

    return SampleResult(
        image=ImageGrid(values),
        mask=ValidityMask.from_bool(in_x & in_y),
        d_dx=d_dx,
        d_dy=d_dy,
        grid_shape=g.shape,
        x0=x0,
        y0=y0,
        x1=x1,
        y1=y1,
        fx=fx,
        fy=fy,
    )


# =========================
# Finite differences
# =========================


def diff_x(a: FloatArray) -> FloatArray:
    """Forward difference along ``x`` with a zero last column."""
    out = np.zeros_like(a)
    out[:, :-1] = a[:, 1:] - a[:, :-1]
    return out


def diff_y(a: FloatArray) -> FloatArray:
    """Forward difference along ``y`` with a zero last row."""
    out = np.zeros_like(a)
    out[:-1] = a[1:] - a[:-1]
    return out


def diff_x_adjoint(u: FloatArray) -> FloatArray:
    out = np.zeros_like(u)
    out[:, 1:] += u[:, :-1]
    out[:, :-1] -= u[:, :-1]
    return out


def diff_y_adjoint(u: FloatArray) -> FloatArray:
    out = np.zeros_like(u)
    out[1:] += u[:-1]
    out[:-1] -= u[:-1]
    return out


def spatial_gradients(grid: ImageGrid) -> tuple[ImageGrid, ImageGrid]:
    """Forward-difference gradients ``(dx, dy)`` of every channel.

    Raises:
        GridError: If the grid is narrower or shorter than 2 pixels.
    """
    if grid.height < 2 or grid.width < 2:
        raise GridError(f"spatial_gradients needs at least a 2x2 grid, got {grid.shape}")
    return ImageGrid(diff_x(grid.data)), ImageGrid(diff_y(grid.data))


# =========================
# Box filter
# =========================


@functools.lru_cache(maxsize=64)
def box_operator(size: int, window: int) -> FloatArray:
    """``size x size`` matrix of a replicate-border moving average.

    Row ``i`` holds the weights of output sample ``i``; ``B @ x`` filters a
    1D signal and ``B.T`` is its exact adjoint.
    """
    if window < 1 or window % 2 == 0:
        raise GridError(f"Box window must be a positive odd integer, got {window}")
    op = ndimage.uniform_filter1d(np.eye(size), size=window, axis=0, mode="nearest")
    return _frozen(op)


def box_filter(a: FloatArray, window: int) -> FloatArray:
    """Separable ``window x window`` mean of an ``(H, W, C)`` array with border replication."""
    by = box_operator(a.shape[0], window)
    bx = box_operator(a.shape[1], window)
    return np.einsum("ij,jwc,kw->ikc", by, a, bx)


def box_filter_adjoint(u: FloatArray, window: int) -> FloatArray:
    by = box_operator(u.shape[0], window)
    bx = box_operator(u.shape[1], window)
    return np.einsum("ji,jwc,wk->ikc", by, u, bx)


# =========================
# Resampling
# =========================


def scaled_shape(shape: tuple[int, int], factor: float) -> tuple[int, int]:
    """``round(shape * factor)`` per axis, half-up, at least 1."""
    return tuple(max(1, math.floor(n * factor + 0.5)) for n in shape)  # type: ignore[return-value]


def resample_coords(in_shape: tuple[int, int], out_shape: tuple[int, int]) -> FloatArray:
    """Inverse map of pixel centers from ``out_shape`` into ``in_shape``, clamped to the input."""
    (hi, wi), (ho, wo) = in_shape, out_shape
    xs = np.clip((np.arange(wo) + 0.5) * (wi / wo) - 0.5, 0.0, wi - 1)
    ys = np.clip((np.arange(ho) + 0.5) * (hi / ho) - 0.5, 0.0, hi - 1)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([xx, yy], axis=-1)


def resample_scale(grid: ImageGrid, factor: float) -> ImageGrid:
    """Bilinear inverse-mapping resample to ``round(shape * factor)``.

    Values are resampled as-is; callers resampling flow must rescale the
    displacements themselves.

    Raises:
        GridError: If ``factor`` is not positive.
    """
    if not factor > 0.0:
        raise GridError(f"Resample factor must be positive, got {factor}")
    out_shape = scaled_shape(grid.shape, factor)
    if out_shape == grid.shape:
        return grid
    return bilinear_sample(grid, resample_coords(grid.shape, out_shape)).image
