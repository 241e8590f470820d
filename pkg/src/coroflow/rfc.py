"""Relative flow capacity: fourth-power diameter ratio along the vessel.

RFC at arclength x is ``(d(x) / d_ref) ** 4``, the fraction of reference
flow-carrying capacity retained at that cross-section. The profile drives
lesion localisation, focal/diffuse pattern calls, and the per-pixel heatmap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MissingReference, NonPositiveDiameter
from .geometry import CoregistrationMap, DiameterProfile
from .validation import check_diameters, check_positive

# A sample counts as diseased when it retains less than this capacity.
LESION_DEPTH_THRESHOLD = 0.75
# Lesions at or under this extent are focal, longer ones diffuse.
FOCAL_WIDTH_LIMIT_MM = 20.0

PATTERN_FOCAL = "focal"
PATTERN_DIFFUSE = "diffuse"
PATTERN_NONE = "none"


@dataclass
class RFCProfile:
    step: float              # mm between samples
    values: np.ndarray       # dimensionless, > 0
    d_ref: float             # mm
    nadir_index: int         # first index attaining the minimum
    nadir_value: float


@dataclass(frozen=True)
class LesionPattern:
    """Focal/diffuse call at a fixed capacity threshold.

    ``width_mm`` counts the contiguous below-threshold samples around the
    nadir, one sampling bin each; it is 0 when no sample is below threshold.
    """

    label: str
    width_mm: float
    nadir_index: Optional[int]
    start_index: Optional[int] = None
    end_index: Optional[int] = None


def compute_rfc(profile: DiameterProfile, d_ref: Optional[float] = None) -> RFCProfile:
    """Convert a diameter profile into a relative flow capacity profile.

    Args:
        profile: Diameter samples in mm at a fixed step.
        d_ref: Reference diameter in mm; falls back to ``profile.d_ref``.

    Returns:
        RFCProfile sampled on the same grid as the input profile.

    Raises:
        MissingReference: No reference diameter available from either source.
        NonPositiveDiameter: Any sample or the reference is not > 0.
    """
    samples = check_diameters(profile.samples)
    ref = d_ref if d_ref is not None else profile.d_ref
    if ref is None:
        raise MissingReference("no reference diameter: estimate one or pass d_ref")
    ref = float(ref)
    if not np.isfinite(ref) or ref <= 0.0:
        raise NonPositiveDiameter(f"reference diameter must be > 0, got {ref!r}")
    values = (samples / ref) ** 4
    nadir = int(np.argmin(values))
    return RFCProfile(step=profile.step, values=values, d_ref=ref,
                      nadir_index=nadir, nadir_value=float(values[nadir]))


def classify_pattern(rfc: RFCProfile,
                     depth_threshold: float = LESION_DEPTH_THRESHOLD,
                     focal_limit_mm: float = FOCAL_WIDTH_LIMIT_MM) -> LesionPattern:
    """Call the disease pattern from the below-threshold run around the nadir.

    A vessel with no sample under ``depth_threshold`` has no lesion. Otherwise
    the contiguous run of below-threshold samples containing the nadir is the
    lesion; runs up to ``focal_limit_mm`` are focal, longer runs diffuse.
    """
    check_positive(focal_limit_mm, "focal_limit_mm")
    below = rfc.values < depth_threshold
    if not below.any():
        return LesionPattern(label=PATTERN_NONE, width_mm=0.0, nadir_index=None)
    nadir = rfc.nadir_index
    start = nadir
    while start > 0 and below[start - 1]:
        start -= 1
    end = nadir
    while end + 1 < len(below) and below[end + 1]:
        end += 1
    width = (end - start + 1) * rfc.step
    label = PATTERN_FOCAL if width <= focal_limit_mm else PATTERN_DIFFUSE
    return LesionPattern(label=label, width_mm=float(width), nadir_index=nadir,
                         start_index=start, end_index=end)


def heatmap_values(coreg: CoregistrationMap, rfc: RFCProfile) -> np.ndarray:
    """Project the RFC profile onto the mask via the coregistration map.

    Returns a float image holding each foreground pixel's nearest-sample RFC
    and NaN on background.
    """
    lut = np.asarray(rfc.values, dtype=float)
    out = np.full(coreg.pixel_to_curve.shape, np.nan)
    fg = coreg.pixel_to_curve >= 0
    idx = np.clip(coreg.pixel_to_curve[fg], 0, len(lut) - 1)
    out[fg] = lut[idx]
    return out
