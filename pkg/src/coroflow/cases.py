"""Case bundles on disk and the end-to-end analysis pipeline.

A case bundle is a directory: a JSON manifest plus one 8-bit greyscale PNG
per cine frame and one for the lumen mask (0 background, 255 lumen). Pixel
data round-trips bitwise. ``run_pipeline`` turns a bundle into an immutable
analysed snapshot carrying every intermediate product and a JSON-ready
report.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import jsonschema
import numpy as np
from PIL import Image

from .errors import MissingManifest, SchemaViolation
from .geometry import (
    Centerline,
    CoregistrationMap,
    DiameterProfile,
    LumenMask,
    build_coregistration,
    diameter_profile,
    estimate_reference,
    extract_centerline,
)
from .hemodynamics import (
    MMHG_TO_PA,
    BranchNode,
    FlowEstimate,
    Geometry1D,
    HemoParams,
    QFRResult,
    TransitEstimate,
    compute_qfr,
    discretize,
    estimate_flow,
    reference_area_m2,
)
from .rfc import LesionPattern, RFCProfile, classify_pattern, compute_rfc
from .validation import check_spacing

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["id", "spacing_mm_per_px", "frame_interval_s", "frames", "mask"],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "spacing_mm_per_px": {
            "oneOf": [
                {"type": "number", "exclusiveMinimum": 0},
                {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                 "minItems": 2, "maxItems": 2},
            ]
        },
        "frame_interval_s": {"type": "number", "exclusiveMinimum": 0},
        "frames": {"type": "array", "items": {"type": "string"}, "minItems": 2},
        "mask": {"type": "string"},
        "mask_frame_index": {"type": "integer", "minimum": 0},
        "contrast_polarity": {"enum": ["dark", "bright"]},
        "branch_nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["arclength_mm", "daughter_radii_mm"],
                "properties": {
                    "arclength_mm": {"type": "number", "minimum": 0},
                    "daughter_radii_mm": {
                        "type": "array", "minItems": 1,
                        "items": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "reference_ffr": {"type": ["number", "null"]},
        "aortic_pressure_mmhg": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "ground_truth": {"type": ["object", "null"]},
    },
}


@dataclass
class CaseBundle:
    """In-memory case: cine stack, mask, acquisition metadata."""

    case_id: str
    frames: np.ndarray                 # (n, H, W) uint8
    frame_interval_s: float
    mask: LumenMask
    contrast_polarity: str = "dark"
    branch_nodes: Tuple[BranchNode, ...] = ()
    reference_ffr: Optional[float] = None
    aortic_pressure_mmhg: Optional[float] = None
    ground_truth: Optional[dict] = None


def save_case(bundle: CaseBundle, directory) -> Path:
    """Write a bundle to a directory, creating it if needed.

    Frames and mask are stored as 8-bit greyscale PNGs (lossless), everything
    else in the manifest, so a load after save is bit-identical.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    frame_names = []
    for i, frame in enumerate(bundle.frames):
        name = f"frame_{i:03d}.png"
        Image.fromarray(np.asarray(frame, dtype=np.uint8), mode="L").save(directory / name)
        frame_names.append(name)
    mask_img = np.where(bundle.mask.grid, 255, 0).astype(np.uint8)
    Image.fromarray(mask_img, mode="L").save(directory / "mask.png")

    manifest = {
        "id": bundle.case_id,
        "spacing_mm_per_px": bundle.mask.spacing,
        "frame_interval_s": bundle.frame_interval_s,
        "frames": frame_names,
        "mask": "mask.png",
        "mask_frame_index": bundle.mask.frame_index,
        "contrast_polarity": bundle.contrast_polarity,
        "branch_nodes": [
            {"arclength_mm": b.arclength_mm,
             "daughter_radii_mm": list(b.daughter_radii_mm)}
            for b in bundle.branch_nodes
        ],
        "reference_ffr": bundle.reference_ffr,
        "aortic_pressure_mmhg": bundle.aortic_pressure_mmhg,
        "ground_truth": bundle.ground_truth,
    }
    with open(directory / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return directory


def load_case(directory) -> CaseBundle:
    """Read a bundle directory back into memory.

    Raises:
        MissingManifest: No manifest file in the directory.
        SchemaViolation: Manifest fails validation (message names the field)
            or a referenced image is missing or the wrong shape.
        AnisotropicSpacing: Per-axis spacings differ.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise MissingManifest(f"no {MANIFEST_NAME} in {directory}")
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"manifest is not valid JSON: {exc}") from exc

    validator = jsonschema.Draft202012Validator(MANIFEST_SCHEMA)
    errors = sorted(validator.iter_errors(manifest), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = ".".join(str(p) for p in first.absolute_path) or "<root>"
        raise SchemaViolation(f"manifest field {where}: {first.message}")

    spacing = check_spacing(manifest["spacing_mm_per_px"], "spacing_mm_per_px")

    def read_png(name: str) -> np.ndarray:
        path = directory / name
        if not path.is_file():
            raise SchemaViolation(f"manifest references missing file {name!r}")
        return np.asarray(Image.open(path).convert("L"))

    frames = np.stack([read_png(name) for name in manifest["frames"]])
    mask_img = read_png(manifest["mask"])
    if mask_img.shape != frames.shape[1:]:
        raise SchemaViolation(
            f"mask shape {mask_img.shape} does not match frames {frames.shape[1:]}")

    branch_nodes = tuple(
        BranchNode(arclength_mm=b["arclength_mm"],
                   daughter_radii_mm=tuple(b["daughter_radii_mm"]))
        for b in manifest.get("branch_nodes", ())
    )
    return CaseBundle(
        case_id=manifest["id"],
        frames=frames,
        frame_interval_s=float(manifest["frame_interval_s"]),
        mask=LumenMask(grid=mask_img > 127, spacing=spacing,
                       frame_index=int(manifest.get("mask_frame_index", 0))),
        contrast_polarity=manifest.get("contrast_polarity", "dark"),
        branch_nodes=branch_nodes,
        reference_ffr=manifest.get("reference_ffr"),
        aortic_pressure_mmhg=manifest.get("aortic_pressure_mmhg"),
        ground_truth=manifest.get("ground_truth"),
    )


@dataclass(frozen=True)
class CaseSnapshot:
    """Immutable result of one pipeline run; stenting and the service read
    from this, never from mutable pipeline state."""

    case_id: str
    mask: LumenMask
    centerline: Centerline
    profile: DiameterProfile
    rfc: RFCProfile
    pattern: LesionPattern
    coreg: CoregistrationMap
    geometry: Geometry1D
    branch_nodes: Tuple[BranchNode, ...]
    transit: Optional[TransitEstimate]
    flow: FlowEstimate
    params: HemoParams
    qfr: QFRResult
    report: dict
    autocompleted: bool


def run_pipeline(bundle: CaseBundle, params: Optional[HemoParams] = None, *,
                 d_ref_override: Optional[float] = None,
                 seed: Optional[Tuple[int, int]] = None,
                 forced_q_hyp_m3_s: Optional[float] = None,
                 step_mm: float = 1.0) -> CaseSnapshot:
    """Run the full analysis on a case bundle.

    Args:
        bundle: Input case.
        params: Physiologic constants; defaults to standard values with the
            bundle's aortic pressure when recorded.
        d_ref_override: Operator reference diameter in mm (skips estimation).
        seed: Operator (row, col) hint selecting the vessel component.
        forced_q_hyp_m3_s: Bypass contrast-transit flow estimation and use
            this hyperaemic flow directly (no transit is reported).
        step_mm: Profile sampling step.

    Returns:
        CaseSnapshot. ``autocompleted`` is True only when no operator
        override of any kind was supplied.
    """
    if params is None:
        p_prox = bundle.aortic_pressure_mmhg
        params = HemoParams() if p_prox is None else HemoParams(p_prox_mmhg=p_prox)

    t_start = time.perf_counter()
    centerline = extract_centerline(bundle.mask, seed=seed)
    profile = diameter_profile(bundle.mask, centerline, step=step_mm)
    profile = estimate_reference(profile, override=d_ref_override)
    rfc = compute_rfc(profile)
    pattern = classify_pattern(rfc)
    coreg = build_coregistration(bundle.mask, profile)
    geometry = discretize(profile, bundle.branch_nodes)
    t_geometry = time.perf_counter()

    if forced_q_hyp_m3_s is None:
        transit, flow = estimate_flow(bundle.frames, centerline, bundle.mask,
                                      bundle.frame_interval_s, params,
                                      polarity=bundle.contrast_polarity)
    else:
        transit = None
        a_ref = reference_area_m2(bundle.mask, centerline)
        q_rest = forced_q_hyp_m3_s / params.kappa
        flow = FlowEstimate(a_ref_m2=a_ref, v_rest_m_s=q_rest / a_ref,
                            q_rest_m3_s=q_rest, q_hyp_m3_s=forced_q_hyp_m3_s,
                            kappa=params.kappa)
    qfr = compute_qfr(geometry, flow.q_hyp_m3_s, params)
    t_end = time.perf_counter()

    autocompleted = (d_ref_override is None and seed is None
                     and forced_q_hyp_m3_s is None)
    timings = {
        "geometry_ms": (t_geometry - t_start) * 1e3,
        "physiology_ms": (t_end - t_geometry) * 1e3,
        "total_ms": (t_end - t_start) * 1e3,
    }
    report = build_report(bundle.case_id, profile, rfc, pattern, transit, flow,
                          qfr, params, autocompleted, timings)
    logger.info("case %s: qfr %.4f (%s, %.0f ms)", bundle.case_id, qfr.qfr,
                pattern.label, timings["total_ms"])
    return CaseSnapshot(case_id=bundle.case_id, mask=bundle.mask,
                        centerline=centerline, profile=profile, rfc=rfc,
                        pattern=pattern, coreg=coreg, geometry=geometry,
                        branch_nodes=bundle.branch_nodes, transit=transit,
                        flow=flow, params=params, qfr=qfr, report=report,
                        autocompleted=autocompleted)


def build_report(case_id: str, profile: DiameterProfile, rfc: RFCProfile,
                 pattern: LesionPattern, transit: Optional[TransitEstimate],
                 flow: FlowEstimate, qfr: QFRResult, params: HemoParams,
                 autocompleted: bool, timings: dict) -> dict:
    """Assemble the JSON-ready analysis report.

    Boundary units: mm, mm^2, mm/s, mm^3/s, mmHg; undetected front positions
    serialise as null.
    """
    transit_block = None
    if transit is not None:
        transit_block = {
            "front_mm": [None if not np.isfinite(v) else float(v)
                         for v in transit.front_mm],
            "t_prox_s": transit.t_prox_s,
            "t_dist_s": transit.t_dist_s,
            "dt_s": transit.dt_s,
            "path_length_mm": transit.path_length_mm,
            "frame_interval_s": transit.frame_interval_s,
        }
    return {
        "case_id": case_id,
        "autocompleted": autocompleted,
        "params": {
            "kappa": flow.kappa,
            "mu_pa_s": params.mu,
            "rho_kg_m3": params.rho,
            "p_prox_mmhg": params.p_prox_mmhg,
        },
        "geometry": {
            "step_mm": profile.step,
            "length_mm": (len(profile) - 1) * profile.step,
            "d_mm": [float(v) for v in profile.samples],
            "d_ref_mm": profile.d_ref,
        },
        "rfc": {
            "step_mm": rfc.step,
            "values": [float(v) for v in rfc.values],
            "nadir_index": rfc.nadir_index,
            "nadir_value": rfc.nadir_value,
        },
        "pattern": {
            "label": pattern.label,
            "width_mm": pattern.width_mm,
            "nadir_index": pattern.nadir_index,
            "start_index": pattern.start_index,
            "end_index": pattern.end_index,
        },
        "transit": transit_block,
        "flow": {
            "a_ref_mm2": flow.a_ref_m2 * 1e6,
            "v_rest_mm_s": flow.v_rest_m_s * 1e3,
            "q_rest_mm3_s": flow.q_rest_m3_s * 1e9,
            "q_hyp_mm3_s": flow.q_hyp_m3_s * 1e9,
            "kappa": flow.kappa,
        },
        "qfr": {
            "value": qfr.qfr,
            "p_dist_mmhg": qfr.p_dist_pa / MMHG_TO_PA,
            "dp_total_mmhg": qfr.dp_total_pa / MMHG_TO_PA,
            "dp_visc_mmhg": [float(v) / MMHG_TO_PA for v in qfr.dp_visc_pa],
            "dp_loc_mmhg": [float(v) / MMHG_TO_PA for v in qfr.dp_loc_pa],
            "flags": list(qfr.flags),
        },
        "timings_ms": dict(timings),
    }
