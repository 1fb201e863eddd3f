"""Depth and image evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from vifidepth.geometry.imgrid import BoolArray, ImageGrid, ValidityMask

MIN_DEPTH = 0.1
MAX_DEPTH = 80.0

# Reported for identical images, where the PSNR is unbounded.
PSNR_EXACT = 99.0


class MetricsError(ValueError):
    """Raised when a metric has nothing to evaluate."""


@dataclass(frozen=True)
class DepthMetrics:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    delta1: float
    delta2: float
    delta3: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def format(self) -> str:
        """One ``name value`` line per metric in the fixed reporting order."""
        return "\n".join(f"{name:<9}{value:.6f}" for name, value in self.as_dict().items()) + "\n"


def _selection(D_gt: ImageGrid, mask: Optional[ValidityMask]) -> BoolArray:
    sel = np.ones(D_gt.shape, dtype=bool) if mask is None else mask.binary()
    if sel.shape != D_gt.shape:
        raise MetricsError(f"Mask shape {sel.shape} does not match depth shape {D_gt.shape}")
    return sel


def median_scale(D_pred: ImageGrid, D_gt: ImageGrid, mask: Optional[ValidityMask] = None) -> ImageGrid:
    """Rescale ``D_pred`` so its median over ``mask`` matches the ground truth's.

    Raises:
        MetricsError: On an empty mask, mismatched shapes or a zero median.
    """
    pred, gt = D_pred.plane(), D_gt.plane()
    if pred.shape != gt.shape:
        raise MetricsError(f"Prediction shape {pred.shape} does not match ground truth {gt.shape}")
    sel = _selection(D_gt, mask)
    if not sel.any():
        raise MetricsError("median_scale needs at least one valid pixel")
    med_pred = float(np.median(pred[sel]))
    med_gt = float(np.median(gt[sel]))
    if med_pred == 0.0 or med_gt == 0.0:
        raise MetricsError(f"median_scale needs non-zero medians, got {med_pred} and {med_gt}")
    return ImageGrid(pred * (med_gt / med_pred))


def depth_metrics(
    D_pred: ImageGrid,
    D_gt: ImageGrid,
    cap: float = MAX_DEPTH,
    min_depth: float = MIN_DEPTH,
    mask: Optional[ValidityMask] = None,
    median_scaled: bool = False,
) -> DepthMetrics:
    """Abs Rel, Sq Rel, RMSE, RMSE log and the three ``delta`` accuracies.

    Pixels with positive ground truth inside ``mask`` are evaluated. With
    ``median_scaled`` the prediction is first median-scaled over them. Both
    depths are then clamped to ``[min_depth, cap]``.

    Raises:
        MetricsError: If no pixel is evaluated.
    """
    pred, gt = D_pred.plane(), D_gt.plane()
    if pred.shape != gt.shape:
        raise MetricsError(f"Prediction shape {pred.shape} does not match ground truth {gt.shape}")
    sel = _selection(D_gt, mask) & (gt > 0.0)
    if not sel.any():
        raise MetricsError("depth_metrics needs at least one pixel with positive ground truth")
    if median_scaled:
        pred = median_scale(D_pred, D_gt, ValidityMask.from_bool(sel)).plane()

    p = np.clip(pred[sel], min_depth, cap)
    g = np.clip(gt[sel], min_depth, cap)
    diff = p - g
    ratio = np.maximum(p / g, g / p)
    return DepthMetrics(
        abs_rel=float(np.mean(np.abs(diff) / g)),
        sq_rel=float(np.mean(diff * diff / g)),
        rmse=math.sqrt(float(np.mean(diff * diff))),
        rmse_log=math.sqrt(float(np.mean((np.log(p) - np.log(g)) ** 2))),
        delta1=float(np.mean(ratio < 1.25)),
        delta2=float(np.mean(ratio < 1.25**2)),
        delta3=float(np.mean(ratio < 1.25**3)),
    )


def abs_rel_map(D_pred: ImageGrid, D_gt: ImageGrid, mask: Optional[ValidityMask] = None) -> ImageGrid:
    """Per-pixel ``|D_pred - D_gt| / D_gt``; zero outside the evaluated pixels."""
    pred, gt = D_pred.plane(), D_gt.plane()
    if pred.shape != gt.shape:
        raise MetricsError(f"Prediction shape {pred.shape} does not match ground truth {gt.shape}")
    sel = _selection(D_gt, mask) & (gt > 0.0)
    safe = np.where(sel, gt, 1.0)
    return ImageGrid(np.where(sel, np.abs(pred - gt) / safe, 0.0))


def psnr(a: ImageGrid, b: ImageGrid, mask: Optional[ValidityMask] = None) -> float:
    """Peak signal-to-noise ratio in dB for values in ``[0, 1]``.

    Returns :data:`PSNR_EXACT` when the selected pixels are identical.

    Raises:
        MetricsError: On shape mismatch or an empty mask.
    """
    if a.data.shape != b.data.shape:
        raise MetricsError(f"Image shapes differ: {a.data.shape} vs {b.data.shape}")
    sel = np.ones(a.shape, dtype=bool) if mask is None else mask.binary()
    if not sel.any():
        raise MetricsError("psnr needs at least one valid pixel")
    mse = float(np.mean((a.data[sel] - b.data[sel]) ** 2))
    if mse == 0.0:
        return PSNR_EXACT
    return 10.0 * math.log10(1.0 / mse)
