"""Pressure-drop physiology over a 1-D vessel discretisation.

The vessel is a chain of cylindrical segments derived from the diameter
profile. Each segment contributes a viscous (Poiseuille) term and, where the
cross-section changes, a Bernoulli-type local loss. The distal pressure under
hyperaemic flow gives the flow ratio::

    dp_visc[n] = 8 * mu * q[n] * dx[n] / (pi * r[n] ** 4)
    dp_loc[n]  = K(a[n] / a[n-1]) * rho / 2 * (q[n] / a[n]) ** 2
    qfr        = (p_prox - sum(dp_visc + dp_loc)) / p_prox

Internally everything is SI (m, m^2, m^3/s, Pa); millimetres and mmHg appear
only at the interfaces. Resting flow comes from contrast transit: the front
arrival times at the proximal and distal reference positions give a velocity,
the proximal lumen area scales it to a volumetric flow, and a fixed factor
converts rest to hyperaemia.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np
from scipy import ndimage

from .errors import (
    EmptyDaughters,
    InconsistentInputs,
    NoArrival,
    NonMonotoneFront,
    NonPositiveDiameter,
    NonPositiveRatio,
)
from .geometry import Centerline, DiameterProfile, LumenMask, _edt_pixels
from .validation import check_diameters, check_positive

logger = logging.getLogger(__name__)

MMHG_TO_PA = 133.322

# Contrast detection relative to the pre-contrast baseline profile.
DARK_CONTRAST_FACTOR = 0.6
BRIGHT_CONTRAST_FACTOR = 1.4
# Fraction of vessel length defining the distal transit reference.
DISTAL_REFERENCE_FRACTION = 0.9
# Proximal window used for the reference cross-section area.
PROXIMAL_AREA_FRACTION = 0.2
# Tolerated front regression (fraction of vessel length) after smoothing.
FRONT_REGRESSION_TOLERANCE = 0.1


@dataclass(frozen=True)
class HemoParams:
    """Physiologic constants and operating point.

    Attributes:
        mu: Blood dynamic viscosity in Pa*s.
        rho: Blood density in kg/m^3.
        p_prox_mmhg: Proximal (aortic) pressure in mmHg.
        kappa: Rest-to-hyperaemia flow scale factor.
    """

    mu: float = 3.5e-3
    rho: float = 1060.0
    p_prox_mmhg: float = 90.0
    kappa: float = 2.0

    @property
    def p_prox_pa(self) -> float:
        return self.p_prox_mmhg * MMHG_TO_PA


@dataclass(frozen=True)
class BranchNode:
    """Side-branch take-off: arclength position and daughter radii (mm)."""

    arclength_mm: float
    daughter_radii_mm: Tuple[float, ...]

    def __post_init__(self):
        if len(self.daughter_radii_mm) == 0:
            raise EmptyDaughters("branch node needs at least one daughter radius")
        for r in self.daughter_radii_mm:
            if not (r > 0.0 and math.isfinite(r)):
                raise NonPositiveDiameter(f"daughter radius must be > 0, got {r!r}")


@dataclass(frozen=True)
class Geometry1D:
    """SI discretisation of the vessel: one cylindrical segment per sample."""

    dx: np.ndarray       # (n,) m
    radius: np.ndarray   # (n,) m
    area: np.ndarray     # (n,) m^2
    branches: Tuple[Tuple[int, Tuple[float, ...]], ...] = ()  # (segment, radii m)


@dataclass(frozen=True)
class TransitEstimate:
    """Contrast front tracking summary.

    ``front_mm`` holds one entry per frame: NaN before first arrival, then
    the median-smoothed, monotone front arclength in mm.
    """

    front_mm: np.ndarray
    t_prox_s: float
    t_dist_s: float
    dt_s: float
    path_length_mm: float
    frame_interval_s: float


@dataclass(frozen=True)
class FlowEstimate:
    """Volumetric flow operating point, SI units."""

    a_ref_m2: float
    v_rest_m_s: float
    q_rest_m3_s: float
    q_hyp_m3_s: float
    kappa: float


@dataclass(frozen=True)
class QFRResult:
    qfr: float
    p_dist_pa: float
    dp_total_pa: float
    dp_visc_pa: np.ndarray
    dp_loc_pa: np.ndarray
    q_m3_s: np.ndarray      # per-segment flow after branch take-offs
    flags: Tuple[str, ...] = ()


def loss_coefficient(ratio: float) -> float:
    """Local pressure-loss coefficient for an area ratio a_n / a_{n-1}.

    Expansion (ratio > 1) uses the Borda-Carnot form, contraction (ratio < 1)
    the standard half-deficit form; both vanish continuously at ratio 1.

    Raises:
        NonPositiveRatio: ratio is not a positive finite number.
    """
    ratio = float(ratio)
    if not math.isfinite(ratio) or ratio <= 0.0:
        raise NonPositiveRatio(f"area ratio must be > 0, got {ratio!r}")
    if ratio >= 1.0:
        return (1.0 - 1.0 / ratio) ** 2
    return 0.5 * (1.0 - ratio)


def murray_split(q: float, daughter_radii: Sequence[float]) -> np.ndarray:
    """Distribute a parent flow among daughters by the cube of their radii.

    Args:
        q: Parent flow (any consistent unit).
        daughter_radii: Radii of the receiving branches, all > 0.

    Returns:
        Array of daughter flows summing to q.
    """
    radii = np.asarray(daughter_radii, dtype=float)
    if radii.size == 0:
        raise EmptyDaughters("cannot split flow among zero daughters")
    if np.any(~np.isfinite(radii)) or np.any(radii <= 0.0):
        raise NonPositiveDiameter("daughter radii must all be > 0")
    cubes = radii ** 3
    return float(q) * cubes / cubes.sum()


def discretize(profile: DiameterProfile,
               branch_nodes: Sequence[BranchNode] = ()) -> Geometry1D:
    """Convert a mm diameter profile into an SI segment chain.

    Each sample becomes one segment of length ``step``. A branch node at
    arclength x attaches to the segment containing x; flow distal to it is
    reduced by a radius-cubed split against the main-vessel continuation.
    """
    samples = check_diameters(profile.samples)
    step_m = check_positive(profile.step, "profile.step") * 1e-3
    radius = samples * 0.5e-3
    area = np.pi * radius ** 2
    dx = np.full(samples.shape, step_m)

    branches = []
    for node in sorted(branch_nodes, key=lambda b: b.arclength_mm):
        seg = int(math.floor(node.arclength_mm / profile.step + 1e-9))
        seg = min(max(seg, 0), len(samples) - 1)
        radii_m = tuple(r * 1e-3 for r in node.daughter_radii_mm)
        branches.append((seg, radii_m))
    return Geometry1D(dx=dx, radius=radius, area=area, branches=tuple(branches))


def segment_flows(geom: Geometry1D, q_hyp_m3_s: float) -> np.ndarray:
    """Per-segment flow after radius-cubed branch take-offs.

    The main-vessel continuation competes with the daughters using the radius
    of the segment just distal to the node, so flow is non-increasing from
    ostium to tip.
    """
    q = np.full(len(geom.dx), float(q_hyp_m3_s))
    for seg, radii_m in geom.branches:
        r_main = geom.radius[seg]
        cubes = r_main ** 3 + sum(r ** 3 for r in radii_m)
        q[seg:] *= r_main ** 3 / cubes
    return q


def compute_qfr(geom: Geometry1D, q_hyp_m3_s: float, params: HemoParams,
                local_losses: bool = True) -> QFRResult:
    """Evaluate the pressure-drop chain and the resulting flow ratio.

    Args:
        geom: SI vessel discretisation.
        q_hyp_m3_s: Hyperaemic inflow at the ostium, >= 0.
        params: Physiologic constants.
        local_losses: When False only the viscous terms are summed, which is
            useful for validating against closed-form Poiseuille solutions.

    Returns:
        QFRResult. ``qfr`` is clamped to 0 with a ``pressure_floor`` flag if
        the summed losses exceed the proximal pressure.
    """
    if q_hyp_m3_s < 0.0 or not math.isfinite(q_hyp_m3_s):
        raise InconsistentInputs(f"hyperaemic flow must be >= 0, got {q_hyp_m3_s!r}")
    q = segment_flows(geom, q_hyp_m3_s)
    dp_visc = 8.0 * params.mu * q * geom.dx / (np.pi * geom.radius ** 4)

    dp_loc = np.zeros_like(dp_visc)
    if local_losses and len(geom.area) > 1:
        ratios = geom.area[1:] / geom.area[:-1]
        k = np.where(ratios >= 1.0, (1.0 - 1.0 / ratios) ** 2, 0.5 * (1.0 - ratios))
        dp_loc[1:] = k * 0.5 * params.rho * (q[1:] / geom.area[1:]) ** 2

    p_prox = params.p_prox_pa
    dp_total = float(np.sum(dp_visc) + np.sum(dp_loc))
    p_dist = p_prox - dp_total
    flags: Tuple[str, ...] = ()
    qfr = p_dist / p_prox
    if qfr < 0.0:
        flags = ("pressure_floor",)
        qfr = 0.0
    return QFRResult(qfr=float(qfr), p_dist_pa=float(p_dist), dp_total_pa=dp_total,
                     dp_visc_pa=dp_visc, dp_loc_pa=dp_loc, q_m3_s=q, flags=flags)


def _front_positions(frames: np.ndarray, centerline: Centerline,
                     polarity: str) -> np.ndarray:
    """Per-frame contrast front arclength (mm), NaN where undetected.

    Frame 0 is the pre-contrast baseline. A centreline sample counts as
    opacified when its 3-sample median-smoothed intensity crosses the
    polarity-specific fraction of the baseline; the front is the farthest
    opacified sample from the proximal end.
    """
    rows, cols = centerline.points[:, 0], centerline.points[:, 1]
    prof = frames[:, rows, cols].astype(float)
    prof = ndimage.median_filter(prof, size=(1, 3), mode="nearest")
    baseline = prof[0]
    if polarity == "dark":
        opac = prof <= DARK_CONTRAST_FACTOR * baseline
    elif polarity == "bright":
        opac = prof >= BRIGHT_CONTRAST_FACTOR * baseline
    else:
        raise InconsistentInputs(f"contrast polarity must be 'dark' or 'bright', got {polarity!r}")
    opac[0] = False  # the baseline frame defines "not yet opacified"

    fronts = np.full(len(frames), np.nan)
    any_opac = opac.any(axis=1)
    last_idx = opac.shape[1] - 1 - np.argmax(opac[:, ::-1], axis=1)
    fronts[any_opac] = centerline.arclength[last_idx[any_opac]]
    return fronts


def _arrival_time(front_mm: np.ndarray, x_mm: float, first_valid: int,
                  frame_interval_s: float) -> float:
    """First time the monotone front reaches x, with sub-frame interpolation."""
    tail = front_mm[first_valid:]
    k = int(np.argmax(tail >= x_mm))
    if k == 0:
        # The front is already at or past x in the first opacified frame, so
        # no bracketing pair exists.  Extrapolate backwards at the entry
        # speed; without at least two distinct samples fall back to the frame
        # time itself.
        ahead = np.flatnonzero(tail > tail[0])
        if ahead.size == 0 or tail[0] <= x_mm:
            return first_valid * frame_interval_s
        j = int(ahead[0])
        lag = (tail[0] - x_mm) * j / (tail[j] - tail[0])
        return max(0.0, (first_valid - lag) * frame_interval_s)
    f0, f1 = tail[k - 1], tail[k]
    frac = 0.0 if f1 == f0 else (x_mm - f0) / (f1 - f0)
    return (first_valid + k - 1 + frac) * frame_interval_s


def estimate_flow(frames: np.ndarray, centerline: Centerline, mask: LumenMask,
                  frame_interval_s: float, params: HemoParams,
                  polarity: str = "dark",
                  distal_fraction: float = DISTAL_REFERENCE_FRACTION,
                  ) -> Tuple[TransitEstimate, FlowEstimate]:
    """Estimate resting and hyperaemic flow from the contrast run.

    The front position series is median-smoothed over frames and forced
    monotone; regressions larger than a tenth of the vessel length indicate
    unusable frames and abort the analysis.

    Args:
        frames: Cine stack (n_frames, H, W); frame 0 must be pre-contrast.
        centerline: Centreline on the mask grid.
        mask: Lumen mask (for the reference-area computation).
        frame_interval_s: Seconds between consecutive frames, > 0.
        params: Physiologic constants; kappa scales rest to hyperaemia.
        polarity: 'dark' for radiographic contrast, 'bright' for inverted data.
        distal_fraction: Arclength fraction of the distal reference point.

    Returns:
        (TransitEstimate, FlowEstimate)

    Raises:
        NoArrival: Front never reaches the distal reference, or transit is
            too fast to resolve at the frame rate.
        NonMonotoneFront: Front regresses beyond tolerance after smoothing.
    """
    frames = np.asarray(frames)
    if frames.ndim != 3 or len(frames) < 2:
        raise InconsistentInputs(
            f"frames must be a (n>=2, H, W) stack, got shape {frames.shape}")
    if frames.shape[1:] != mask.grid.shape:
        raise InconsistentInputs(
            f"frame shape {frames.shape[1:]} does not match mask {mask.grid.shape}")
    check_positive(frame_interval_s, "frame_interval_s")
    if not 0.0 < distal_fraction <= 1.0:
        raise InconsistentInputs(f"distal_fraction must be in (0, 1], got {distal_fraction}")

    length = centerline.length
    fronts = _front_positions(frames, centerline, polarity)
    valid = np.flatnonzero(np.isfinite(fronts))
    if valid.size == 0:
        raise NoArrival("no contrast arrival detected on the centreline")
    first_valid = int(valid[0])

    tail = fronts[first_valid:].copy()
    for i in range(1, len(tail)):       # fill detection dropouts forward
        if not np.isfinite(tail[i]):
            tail[i] = tail[i - 1]
    tail = ndimage.median_filter(tail, size=3, mode="nearest")
    regression = float(np.max(np.maximum.accumulate(tail) - tail))
    if regression > FRONT_REGRESSION_TOLERANCE * length:
        raise NonMonotoneFront(
            f"front regressed {regression:.2f} mm on a {length:.2f} mm vessel")
    tail = np.maximum.accumulate(tail)
    front_mm = np.full(len(frames), np.nan)
    front_mm[first_valid:] = tail

    x_dist = distal_fraction * length
    if tail[-1] < x_dist:
        raise NoArrival(
            f"front reached {tail[-1]:.2f} mm of the {x_dist:.2f} mm distal reference")
    t_prox = _arrival_time(front_mm, 0.0, first_valid, frame_interval_s)
    t_dist = _arrival_time(front_mm, x_dist, first_valid, frame_interval_s)
    dt = t_dist - t_prox
    logger.debug("transit: arrival frame %d, t_prox %.3f s, t_dist %.3f s",
                 first_valid, t_prox, t_dist)
    if dt <= 0.0:
        raise NoArrival("contrast transit is not resolvable at this frame rate")

    transit = TransitEstimate(front_mm=front_mm, t_prox_s=t_prox, t_dist_s=t_dist,
                              dt_s=dt, path_length_mm=x_dist,
                              frame_interval_s=frame_interval_s)
    flow = _flow_from_transit(transit, centerline, mask, params)
    return transit, flow


def _flow_from_transit(transit: TransitEstimate, centerline: Centerline,
                       mask: LumenMask, params: HemoParams) -> FlowEstimate:
    a_ref = reference_area_m2(mask, centerline)
    v_rest = transit.path_length_mm * 1e-3 / transit.dt_s
    q_rest = v_rest * a_ref
    return FlowEstimate(a_ref_m2=a_ref, v_rest_m_s=v_rest, q_rest_m3_s=q_rest,
                        q_hyp_m3_s=params.kappa * q_rest, kappa=params.kappa)


def reference_area_m2(mask: LumenMask, centerline: Centerline,
                      fraction: float = PROXIMAL_AREA_FRACTION) -> float:
    """Mean lumen area over the proximal fraction of the centreline, in m^2."""
    limit = fraction * centerline.length
    sel = centerline.arclength <= limit + 1e-9
    pts = centerline.points[sel]
    edt = _edt_pixels(mask.grid)[pts[:, 0], pts[:, 1]]
    d_mm = (2.0 * edt - 1.0) * mask.spacing
    return float(np.mean(np.pi * (d_mm * 0.5e-3) ** 2))


def with_kappa(flow: FlowEstimate, kappa: float) -> FlowEstimate:
    """Re-derive the hyperaemic operating point for a different scale factor."""
    check_positive(kappa, "kappa")
    return replace(flow, kappa=float(kappa), q_hyp_m3_s=float(kappa) * flow.q_rest_m3_s)
