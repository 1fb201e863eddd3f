"""Scale-invariant depth consistency losses.

``SI(D1, D2) = (1/V) sum e_i^2 - (beta/V^2) (sum e_i)^2`` with
``e_i = ln D1_i - ln D2_i`` over the ``V`` masked pixels. SVDC ties the
single- and multi-frame depths of one view; the two SADC terms tie both to
the augmented-view depth restored to the original view and scaled by ``f_s``.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vifidepth.geometry.imgrid import FloatArray, ImageGrid, ValidityMask


class ConsistencyError(ValueError):
    """Raised on empty masks or non-positive depths."""


class ConsistencyConfig(BaseModel):
    """``beta`` of the scale-invariant error and the consistency weight ``lambda``."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    beta: float = Field(default=0.5, ge=0.0, le=1.0)
    lambda_: float = Field(default=0.2, ge=0.0, alias="lambda")


# =========================
# Scale-invariant error
# =========================


@dataclass(frozen=True)
class ScaleInvariantTerm:
    """SI value and its gradients w.r.t. both depth maps (zero off the mask)."""

    value: float
    grad_1: FloatArray
    grad_2: FloatArray


def scale_invariant_term(
    D1: ImageGrid,
    D2: ImageGrid,
    mask: Optional[ValidityMask],
    beta: float,
) -> ScaleInvariantTerm:
    """Scale-invariant log error with analytic gradients.

    Raises:
        ConsistencyError: If the mask selects no pixel, shapes differ, or a
            selected depth is not positive.
    """
    a, b = D1.plane(), D2.plane()
    if a.shape != b.shape:
        raise ConsistencyError(f"Depth shapes differ: {a.shape} vs {b.shape}")
    sel = np.ones(a.shape, dtype=bool) if mask is None else mask.binary()
    if sel.shape != a.shape:
        raise ConsistencyError(f"Mask shape {sel.shape} does not match depth shape {a.shape}")
    count = int(np.count_nonzero(sel))
    if count == 0:
        raise ConsistencyError("Scale-invariant error needs at least one valid pixel")
    if np.any(a[sel] <= 0.0) or np.any(b[sel] <= 0.0):
        raise ConsistencyError("Scale-invariant error requires positive depth on valid pixels")

    e = np.zeros(a.shape)
    e[sel] = np.log(a[sel]) - np.log(b[sel])
    total = float(np.sum(e[sel]))
    value = float(np.sum(e[sel] ** 2)) / count - beta * total * total / (count * count)

    d_e = np.where(sel, 2.0 * e / count - 2.0 * beta * total / (count * count), 0.0)
    safe_a = np.where(sel, a, 1.0)
    safe_b = np.where(sel, b, 1.0)
    return ScaleInvariantTerm(value=value, grad_1=d_e / safe_a, grad_2=-d_e / safe_b)


def scale_invariant_error(D1: ImageGrid, D2: ImageGrid, mask: ValidityMask, beta: float) -> float:
    return scale_invariant_term(D1, D2, mask, beta).value


def svdc(D_m: ImageGrid, D: ImageGrid, beta: float = 0.5) -> float:
    """Standard-view consistency: SI between multi- and single-frame depth over all pixels."""
    return scale_invariant_term(D_m, D, None, beta).value


def _scaled(D_hat: ImageGrid, scale: float) -> ImageGrid:
    return ImageGrid(D_hat.data * scale)


def sadc(D: ImageGrid, D_hat: ImageGrid, scale: float, M_sa: ValidityMask, beta: float = 0.5) -> float:
    """Scale-aware consistency: SI between ``D`` and ``f_s * D_hat`` on ``M_sa``."""
    return scale_invariant_term(D, _scaled(D_hat, scale), M_sa, beta).value


# =========================
# Triplet consistency
# =========================


@dataclass(frozen=True)
class TripletLosses:
    """Per-position loss components.

    Built through :meth:`compose`, which fixes
    ``l_tc = l_sv + l_sa + l_sa_m`` and
    ``total = l_ss + l_ss_m + l_ss_tilde + lambda * l_tc``.
    """

    l_ss: float
    l_ss_m: float
    l_ss_tilde: float
    l_sv: float
    l_sa: float
    l_sa_m: float
    l_tc: float
    lambda_: float
    total: float

    @classmethod
    def compose(
        cls,
        l_ss: float = 0.0,
        l_ss_m: float = 0.0,
        l_ss_tilde: float = 0.0,
        l_sv: float = 0.0,
        l_sa: float = 0.0,
        l_sa_m: float = 0.0,
        lambda_: float = 0.2,
    ) -> TripletLosses:
        l_tc = l_sv + l_sa + l_sa_m
        return cls(
            l_ss=l_ss,
            l_ss_m=l_ss_m,
            l_ss_tilde=l_ss_tilde,
            l_sv=l_sv,
            l_sa=l_sa,
            l_sa_m=l_sa_m,
            l_tc=l_tc,
            lambda_=lambda_,
            total=l_ss + l_ss_m + l_ss_tilde + lambda_ * l_tc,
        )


@dataclass(frozen=True)
class TripletConsistency:
    """SVDC + two SADC terms and the gradient of their sum.

    Attributes:
        grad_depth: ``dl_tc/dD``.
        grad_multi: ``dl_tc/dD_m``.
        grad_restored: ``dl_tc/dD_hat``.
    """

    l_sv: float
    l_sa: float
    l_sa_m: float
    grad_depth: FloatArray
    grad_multi: FloatArray
    grad_restored: FloatArray

    @property
    def l_tc(self) -> float:
        return self.l_sv + self.l_sa + self.l_sa_m

    def losses(
        self,
        l_ss: float = 0.0,
        l_ss_m: float = 0.0,
        l_ss_tilde: float = 0.0,
        lambda_: float = 0.2,
    ) -> TripletLosses:
        """Combine with the self-supervised components of the same position."""
        return TripletLosses.compose(l_ss, l_ss_m, l_ss_tilde, self.l_sv, self.l_sa, self.l_sa_m, lambda_)


def triplet_consistency(
    D: ImageGrid,
    D_m: Optional[ImageGrid],
    D_hat: Optional[ImageGrid],
    scale: float,
    M_sa: Optional[ValidityMask],
    cfg: ConsistencyConfig,
    use_svdc: bool = True,
    use_sadc: bool = True,
) -> TripletConsistency:
    """``l_sv = SI(D_m, D)``, ``l_sa = SI(D, f_s D_hat)``, ``l_sa_m = SI(D_m, f_s D_hat)``.

    Disabled terms contribute zero value and zero gradient. A missing
    multi-frame depth disables ``l_sv`` and ``l_sa_m``; a missing restored
    depth disables both SADC terms.

    Raises:
        ConsistencyError: If SADC is requested without ``M_sa``.
    """
    zeros = np.zeros(D.shape)
    grad_d, grad_m, grad_hat = zeros.copy(), zeros.copy(), zeros.copy()
    l_sv = l_sa = l_sa_m = 0.0

    if use_svdc and D_m is not None:
        sv = scale_invariant_term(D_m, D, None, cfg.beta)
        l_sv = sv.value
        grad_m += sv.grad_1
        grad_d += sv.grad_2

    if use_sadc and D_hat is not None:
        if M_sa is None:
            raise ConsistencyError("SADC needs the coverage mask of the restored depth")
        restored = _scaled(D_hat, scale)
        sa = scale_invariant_term(D, restored, M_sa, cfg.beta)
        l_sa = sa.value
        grad_d += sa.grad_1
        grad_hat += scale * sa.grad_2
        if D_m is not None:
            sa_m = scale_invariant_term(D_m, restored, M_sa, cfg.beta)
            l_sa_m = sa_m.value
            grad_m += sa_m.grad_1
            grad_hat += scale * sa_m.grad_2

    return TripletConsistency(
        l_sv=l_sv,
        l_sa=l_sa,
        l_sa_m=l_sa_m,
        grad_depth=grad_d,
        grad_multi=grad_m,
        grad_restored=grad_hat,
    )


def total_objective(positions: Iterable[TripletLosses]) -> float:
    """Sum of per-position totals, accumulated in the given order."""
    total = 0.0
    for losses in positions:
        total += losses.total
    return total
