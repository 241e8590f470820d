"""Virtual stenting: reshape the diameter profile and recompute the flow ratio.

A stent plan names a proximal and a distal landing point. The post-stent
profile blends the measured lumen towards a target calibre interpolated
between healthy references sampled just outside the landing zone, with
smoothstep transition edges so the virtual device has no step changes. Flow
is frozen at the pre-stent operating point, so the residual QFR isolates the
geometric effect of the device.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import NonPositiveDiameter, SpanOutOfRange, SpanTooShortForEdges
from .geometry import REFERENCE_DIAMETER_PERCENTILE, DiameterProfile, replace_profile
from .hemodynamics import QFRResult, compute_qfr, discretize
from .rfc import RFCProfile, compute_rfc

if TYPE_CHECKING:  # pragma: no cover
    from .cases import CaseSnapshot

# Healthy-calibre landing references come from this window outside each
# landing point.
LANDING_WINDOW_MM = 5.0
DEFAULT_EDGE_LENGTH_MM = 2.0


@dataclass(frozen=True)
class StentPlan:
    """Operator-chosen device span and calibre limit, all in mm."""

    x_prox_mm: float
    x_dist_mm: float
    d_max_mm: float
    edge_len_mm: float = DEFAULT_EDGE_LENGTH_MM

    def __post_init__(self):
        if not (self.d_max_mm > 0.0 and np.isfinite(self.d_max_mm)):
            raise NonPositiveDiameter(f"d_max_mm must be > 0, got {self.d_max_mm!r}")
        if not (self.edge_len_mm > 0.0 and np.isfinite(self.edge_len_mm)):
            raise SpanTooShortForEdges(f"edge_len_mm must be > 0, got {self.edge_len_mm!r}")


# Set on results whose span covers a declared branch node: the frozen-flow
# model cannot account for the daughter take-off inside the device.
FLAG_LIMITED_ACCURACY_BRANCH = "LimitedAccuracyBranch"


@dataclass(frozen=True)
class StentSimResult:
    plan: StentPlan
    post_profile: DiameterProfile
    post_rfc: RFCProfile
    post_qfr: QFRResult
    pre_qfr: float
    flags: frozenset = frozenset()

    @property
    def residual_qfr(self) -> float:
        return self.post_qfr.qfr

    @property
    def delta_qfr(self) -> float:
        return self.post_qfr.qfr - self.pre_qfr


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def stent_weight(xs: np.ndarray, plan: StentPlan) -> np.ndarray:
    """Blend weight alpha(x): 0 outside the span, 1 on the plateau, smoothstep
    ramps of edge_len_mm just inside each landing point."""
    alpha = np.zeros_like(xs, dtype=float)
    inside = (xs >= plan.x_prox_mm) & (xs <= plan.x_dist_mm)
    rise = _smoothstep((xs - plan.x_prox_mm) / plan.edge_len_mm)
    fall = _smoothstep((plan.x_dist_mm - xs) / plan.edge_len_mm)
    alpha[inside] = np.minimum(rise, fall)[inside]
    return alpha


def _landing_reference(profile: DiameterProfile, x_mm: float, side: str) -> float:
    """Healthy calibre near a landing point, from the window outside the span.

    Falls back to the sample at the landing point itself when the window is
    empty (landing at a vessel end).
    """
    xs = np.arange(len(profile)) * profile.step
    if side == "prox":
        sel = (xs >= x_mm - LANDING_WINDOW_MM) & (xs < x_mm)
    else:
        sel = (xs > x_mm) & (xs <= x_mm + LANDING_WINDOW_MM)
    if not sel.any():
        idx = int(round(x_mm / profile.step))
        idx = min(max(idx, 0), len(profile) - 1)
        return float(profile.samples[idx])
    return float(np.percentile(profile.samples[sel], REFERENCE_DIAMETER_PERCENTILE))


def apply_stent(profile: DiameterProfile, plan: StentPlan) -> DiameterProfile:
    """Return the post-stent diameter profile.

    The target calibre interpolates linearly between the proximal and distal
    landing references and is capped at the device limit. Within the span the
    lumen is blended towards the target by the smoothstep weight; a stent
    never narrows the lumen, so the result is clamped at the measured
    diameter. Samples outside the span are untouched.

    Raises:
        SpanOutOfRange: Landing points are not ordered inside the profile.
        SpanTooShortForEdges: Span cannot hold two transition edges.
    """
    xs = np.arange(len(profile)) * profile.step
    length = xs[-1] if len(xs) else 0.0
    if not (0.0 <= plan.x_prox_mm < plan.x_dist_mm <= length):
        raise SpanOutOfRange(
            f"span [{plan.x_prox_mm}, {plan.x_dist_mm}] mm must lie ordered inside "
            f"[0, {length}] mm")
    if plan.x_dist_mm - plan.x_prox_mm < 2.0 * plan.edge_len_mm:
        raise SpanTooShortForEdges(
            f"span {plan.x_dist_mm - plan.x_prox_mm} mm is shorter than two "
            f"{plan.edge_len_mm} mm edges")

    d_prox = _landing_reference(profile, plan.x_prox_mm, "prox")
    d_dist = _landing_reference(profile, plan.x_dist_mm, "dist")
    t = (xs - plan.x_prox_mm) / (plan.x_dist_mm - plan.x_prox_mm)
    d_tgt = np.minimum(d_prox + np.clip(t, 0.0, 1.0) * (d_dist - d_prox), plan.d_max_mm)

    alpha = stent_weight(xs, plan)
    blended = alpha * d_tgt + (1.0 - alpha) * profile.samples
    post = np.maximum(profile.samples, blended)
    return replace_profile(profile, samples=post)


def simulate_stent(case: "CaseSnapshot", plan: StentPlan) -> StentSimResult:
    """Simulate a device on an analysed case and recompute the flow ratio.

    Flow and the capacity reference are frozen at the pre-stent values, so
    repeated simulations of the same plan are bit-identical and the delta
    reflects geometry alone.
    """
    post_profile = apply_stent(case.profile, plan)
    post_rfc = compute_rfc(post_profile, d_ref=case.rfc.d_ref)
    geom = discretize(post_profile, case.branch_nodes)
    post_qfr = compute_qfr(geom, case.flow.q_hyp_m3_s, case.params)
    flags = set()
    if any(plan.x_prox_mm <= node.arclength_mm <= plan.x_dist_mm
           for node in case.branch_nodes):
        flags.add(FLAG_LIMITED_ACCURACY_BRANCH)
    return StentSimResult(plan=plan, post_profile=post_profile, post_rfc=post_rfc,
                          post_qfr=post_qfr, pre_qfr=case.qfr.qfr,
                          flags=frozenset(flags))
