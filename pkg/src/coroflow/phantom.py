"""Synthetic case bundles with analytic ground truth.

Generates a straight horizontal vessel whose diameter profile is a product
of Gaussian narrowings on a constant healthy calibre, rasterised onto an
isotropic grid, plus a cine sequence in which a contrast front advances at a
constant velocity. Every derived quantity (diameter profile, front schedule,
transit times) has a closed form, so the phantoms serve as end-to-end oracles
for the analysis pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .cases import CaseBundle
from .errors import GeometryOverflow, InconsistentInputs
from .geometry import LumenMask
from .hemodynamics import BranchNode
from .validation import check_positive

BACKGROUND_LEVEL = 170
LUMEN_BASELINE_LEVEL = 160
CONTRAST_LEVEL = 60       # well below 0.6x baseline even with noise
BRIGHT_CONTRAST_LEVEL = 240


@dataclass(frozen=True)
class LesionSpec:
    """A Gaussian narrowing: fractional diameter loss ``depth`` at the centre,
    falling off with sigma = width_mm / 4."""

    centre_mm: float
    width_mm: float
    depth: float

    def __post_init__(self):
        check_positive(self.width_mm, "width_mm")
        if not 0.0 <= self.depth < 1.0:
            raise InconsistentInputs(f"lesion depth must be in [0, 1), got {self.depth!r}")


@dataclass(frozen=True)
class PhantomSpec:
    """Full description of a synthetic case; deterministic given the seed."""

    length_mm: float = 60.0
    d_ref_mm: float = 3.0
    lesions: Tuple[LesionSpec, ...] = ()
    spacing_mm: float = 0.2
    n_frames: int = 30
    frame_interval_s: float = 1.0 / 15.0
    front_velocity_mm_s: float = 60.0
    noise_sd: float = 1.5
    seed: int = 0
    margin_px: int = 12
    image_shape: Optional[Tuple[int, int]] = None
    branch_nodes: Tuple[BranchNode, ...] = ()
    contrast_polarity: str = "dark"
    case_id: str = "phantom"

    def __post_init__(self):
        check_positive(self.length_mm, "length_mm")
        check_positive(self.d_ref_mm, "d_ref_mm")
        check_positive(self.spacing_mm, "spacing_mm")
        check_positive(self.frame_interval_s, "frame_interval_s")
        check_positive(self.front_velocity_mm_s, "front_velocity_mm_s")
        if self.n_frames < 2:
            raise InconsistentInputs(f"n_frames must be >= 2, got {self.n_frames}")


@dataclass(frozen=True)
class PhantomTruth:
    """Closed-form quantities the pipeline should recover."""

    x_mm: np.ndarray          # arclength grid from the vessel's raster start
    d_mm: np.ndarray          # analytic diameter on that grid
    x0_col: int               # image column of arclength 0
    mid_row: int
    front_mm: np.ndarray      # per-frame front position, NaN on frame 0
    velocity_mm_s: float
    min_d_mm: float
    min_d_x_mm: float


def analytic_diameter(spec: PhantomSpec, x_mm: np.ndarray) -> np.ndarray:
    """Diameter at arclength x: reference calibre scaled by each lesion's
    Gaussian deficit, composed multiplicatively for overlapping lesions."""
    x = np.asarray(x_mm, dtype=float)
    d = np.full(x.shape, spec.d_ref_mm)
    for lesion in spec.lesions:
        sigma = lesion.width_mm / 4.0
        d = d * (1.0 - lesion.depth * np.exp(-((x - lesion.centre_mm) ** 2)
                                             / (2.0 * sigma * sigma)))
    return d


def front_schedule(spec: PhantomSpec) -> np.ndarray:
    """Front position per frame: NaN on the baseline frame, then advancing at
    the configured velocity starting from the vessel entry."""
    front = np.full(spec.n_frames, np.nan)
    k = np.arange(1, spec.n_frames)
    front[1:] = spec.front_velocity_mm_s * spec.frame_interval_s * (k - 1)
    return front


def generate_phantom(spec: PhantomSpec) -> CaseBundle:
    """Rasterise the phantom into a complete case bundle.

    The vessel is horizontal; a pixel belongs to the lumen when its centre
    row lies strictly inside the analytic half-width, which keeps the
    measured half-pixel-rule diameter within one pixel spacing of the
    analytic profile everywhere.

    Raises:
        GeometryOverflow: An explicit image_shape cannot contain the vessel
            plus margins.
    """
    s = spec.spacing_mm
    n_cols = int(round(spec.length_mm / s)) + 1
    half_max_px = int(math.ceil(spec.d_ref_mm / (2.0 * s)))
    need_h = 2 * (spec.margin_px + half_max_px) + 1
    need_w = 2 * spec.margin_px + n_cols
    if spec.image_shape is None:
        shape = (need_h, need_w)
    else:
        shape = tuple(spec.image_shape)
        if shape[0] < need_h or shape[1] < need_w:
            raise GeometryOverflow(
                f"vessel needs at least {need_h}x{need_w} px, image is {shape[0]}x{shape[1]}")

    mid_row = shape[0] // 2
    x0_col = spec.margin_px
    cols = np.arange(n_cols)
    x_mm = cols * s
    d_mm = analytic_diameter(spec, x_mm)

    rows = np.arange(shape[0])
    half_px = d_mm / (2.0 * s)
    grid = np.zeros(shape, dtype=bool)
    grid[:, x0_col:x0_col + n_cols] = (
        np.abs(rows[:, None] - mid_row) < half_px[None, :])

    rng = np.random.default_rng(spec.seed)
    front = front_schedule(spec)
    base = np.full(shape, BACKGROUND_LEVEL, dtype=float)
    base[grid] = LUMEN_BASELINE_LEVEL
    fill = CONTRAST_LEVEL if spec.contrast_polarity == "dark" else BRIGHT_CONTRAST_LEVEL

    frames = np.empty((spec.n_frames,) + shape, dtype=np.uint8)
    col_x = (np.arange(shape[1]) - x0_col) * s
    for k in range(spec.n_frames):
        frame = base.copy()
        if np.isfinite(front[k]):
            opacified = grid & (col_x[None, :] <= front[k])
            frame[opacified] = fill
        frame += rng.normal(0.0, spec.noise_sd, size=shape)
        frames[k] = np.clip(np.round(frame), 0, 255).astype(np.uint8)

    min_idx = int(np.argmin(d_mm))
    truth = PhantomTruth(x_mm=x_mm, d_mm=d_mm, x0_col=x0_col, mid_row=mid_row,
                         front_mm=front, velocity_mm_s=spec.front_velocity_mm_s,
                         min_d_mm=float(d_mm[min_idx]), min_d_x_mm=float(x_mm[min_idx]))
    return CaseBundle(
        case_id=spec.case_id,
        frames=frames,
        frame_interval_s=spec.frame_interval_s,
        mask=LumenMask(grid=grid, spacing=s, frame_index=0),
        contrast_polarity=spec.contrast_polarity,
        branch_nodes=spec.branch_nodes,
        ground_truth=_truth_dict(truth),
    )


def _truth_dict(truth: PhantomTruth) -> dict:
    """Ground truth as a JSON-ready mapping (NaN encoded as None)."""
    return {
        "x_mm": truth.x_mm.tolist(),
        "d_mm": truth.d_mm.tolist(),
        "x0_col": truth.x0_col,
        "mid_row": truth.mid_row,
        "front_mm": [None if not np.isfinite(v) else float(v) for v in truth.front_mm],
        "velocity_mm_s": truth.velocity_mm_s,
        "min_d_mm": truth.min_d_mm,
        "min_d_x_mm": truth.min_d_x_mm,
    }
