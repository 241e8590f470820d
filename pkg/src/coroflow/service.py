"""HTTP service exposing analysis sessions to interactive clients.

Each successfully analysed case becomes an immutable session: the report,
profile, coregistration map and heatmap are serialised once at creation, so
repeated GETs return byte-identical payloads. Re-posting a case opens a new
session with a higher version number; virtual stenting never mutates the
session it reads from.
"""

from __future__ import annotations

import colorsys
import io
import itertools
import json
import logging
import tempfile
import threading
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import Response
from PIL import Image
from pydantic import BaseModel, Field, ValidationError

from .cases import CaseSnapshot, load_case, run_pipeline
from .errors import CAUSE_INVALID_INPUT, CoroflowError
from .hemodynamics import MMHG_TO_PA, HemoParams
from .rfc import heatmap_values
from .stenting import StentPlan, simulate_stent

logger = logging.getLogger(__name__)


class AnalysisOptions(BaseModel):
    """Optional per-request analysis knobs accepted by POST /cases."""

    path: Optional[str] = None
    kappa: Optional[float] = Field(default=None, gt=0)
    p_prox_mmhg: Optional[float] = Field(default=None, gt=0)
    d_ref_mm: Optional[float] = None
    step_mm: float = Field(default=1.0, gt=0)


class SimulateRequest(BaseModel):
    x_prox_mm: float
    x_dist_mm: float
    d_max_mm: float
    edge_len_mm: float = 2.0


@dataclass(frozen=True)
class Session:
    session_id: str
    version: int
    snapshot: CaseSnapshot
    frames: np.ndarray
    report_bytes: bytes
    rfc_bytes: bytes
    coreg_bytes: bytes
    heatmap_png: bytes


def _json_bytes(payload) -> bytes:
    return json.dumps(payload, sort_keys=True).encode()


def _heatmap_palette() -> bytes:
    """256-entry palette: index 0 black background, 1..255 blue-to-red ramp."""
    table = [0, 0, 0]
    for i in range(1, 256):
        t = (i - 1) / 254.0
        r, g, b = colorsys.hsv_to_rgb((2.0 / 3.0) * (1.0 - t), 1.0, 1.0)
        table.extend([int(round(255 * r)), int(round(255 * g)), int(round(255 * b))])
    return bytes(table)


_PALETTE = _heatmap_palette()


def render_heatmap_png(snapshot: CaseSnapshot) -> bytes:
    """Indexed-colour PNG of the per-pixel capacity map.

    Capacity is clipped to [0, 1] and mapped onto palette indices 1..255;
    background stays at index 0.
    """
    values = heatmap_values(snapshot.coreg, snapshot.rfc)
    idx = np.zeros(values.shape, dtype=np.uint8)
    fg = np.isfinite(values)
    idx[fg] = (1 + np.round(254 * np.clip(values[fg], 0.0, 1.0))).astype(np.uint8)
    img = Image.fromarray(idx, mode="P")
    img.putpalette(_PALETTE)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _coreg_payload(snapshot: CaseSnapshot) -> dict:
    coreg = snapshot.coreg
    fg = np.argwhere(coreg.pixel_to_curve >= 0)
    samples = coreg.pixel_to_curve[fg[:, 0], fg[:, 1]]
    return {
        "n_samples": int(len(coreg.curve_to_pixel)),
        "curve_to_pixel": coreg.curve_to_pixel.tolist(),
        "pixel_to_curve": {
            "rows": fg[:, 0].tolist(),
            "cols": fg[:, 1].tolist(),
            "sample": samples.tolist(),
        },
    }


def _simulate_payload(session: Session, result) -> dict:
    return {
        "session_id": session.session_id,
        "version": session.version,
        "plan": {
            "x_prox_mm": result.plan.x_prox_mm,
            "x_dist_mm": result.plan.x_dist_mm,
            "d_max_mm": result.plan.d_max_mm,
            "edge_len_mm": result.plan.edge_len_mm,
        },
        "pre_qfr": result.pre_qfr,
        "residual_qfr": result.residual_qfr,
        "delta_qfr": result.delta_qfr,
        "flags": sorted(result.flags),
        "post": {
            "d_mm": [float(v) for v in result.post_profile.samples],
            "rfc_values": [float(v) for v in result.post_rfc.values],
            "rfc_nadir_index": result.post_rfc.nadir_index,
            "rfc_nadir_value": result.post_rfc.nadir_value,
            "p_dist_mmhg": result.post_qfr.p_dist_pa / MMHG_TO_PA,
            "dp_total_mmhg": result.post_qfr.dp_total_pa / MMHG_TO_PA,
            "flags": list(result.post_qfr.flags),
        },
    }


def _http_error(exc: CoroflowError, status: int) -> HTTPException:
    return HTTPException(status_code=status,
                         detail={"cause": exc.cause, "message": str(exc)})


def create_app() -> FastAPI:
    """Build the service with an empty in-memory session store."""
    app = FastAPI(title="coroflow", version="0.1.0")
    sessions: Dict[str, Session] = {}
    versions = itertools.count(1)
    lock = threading.Lock()

    def _open_session(bundle, options: AnalysisOptions) -> Session:
        params = None
        if options.kappa is not None or options.p_prox_mmhg is not None:
            base = HemoParams()
            p_prox = options.p_prox_mmhg
            if p_prox is None:
                p_prox = (bundle.aortic_pressure_mmhg
                          if bundle.aortic_pressure_mmhg is not None
                          else base.p_prox_mmhg)
            params = HemoParams(kappa=options.kappa or base.kappa, p_prox_mmhg=p_prox)
        snapshot = run_pipeline(bundle, params, d_ref_override=options.d_ref_mm,
                                step_mm=options.step_mm)
        with lock:
            version = next(versions)
        session = Session(
            session_id=f"s{version:06d}",
            version=version,
            snapshot=snapshot,
            frames=bundle.frames,
            report_bytes=_json_bytes(snapshot.report),
            rfc_bytes=_json_bytes(snapshot.report["rfc"]),
            coreg_bytes=_json_bytes(_coreg_payload(snapshot)),
            heatmap_png=render_heatmap_png(snapshot),
        )
        with lock:
            sessions[session.session_id] = session
        logger.info("session %s (v%d): case %s qfr %.4f", session.session_id,
                    session.version, snapshot.case_id, snapshot.qfr.qfr)
        return session

    def _get(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    @app.post("/cases")
    async def create_case(request: Request):
        # multipart: zipped bundle upload, options as an optional JSON form
        # field; anything else: a JSON body naming a bundle path on disk
        data = None
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("bundle")
            if upload is None:
                raise HTTPException(status_code=400,
                                    detail="multipart request must include a 'bundle' file")
            data = await upload.read()
            raw_options = form.get("options")
        else:
            raw_options = (await request.body()) or None
        try:
            opts = (AnalysisOptions.model_validate_json(raw_options)
                    if raw_options else AnalysisOptions())
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail={
                "cause": CAUSE_INVALID_INPUT, "message": str(exc)}) from exc

        try:
            if data is not None:
                with tempfile.TemporaryDirectory() as tmp:
                    with zipfile.ZipFile(io.BytesIO(data)) as zf:
                        for member in zf.namelist():
                            target = Path(tmp) / member
                            if not target.resolve().is_relative_to(Path(tmp).resolve()):
                                raise HTTPException(status_code=400,
                                                    detail="unsafe path in bundle archive")
                        zf.extractall(tmp)
                    root = _find_manifest_dir(Path(tmp))
                    case = load_case(root)
            elif opts.path:
                case = load_case(opts.path)
            else:
                raise HTTPException(status_code=400,
                                    detail="provide a bundle archive or a bundle path")
            session = _open_session(case, opts)
        except CoroflowError as exc:
            # bundle loading and analysis failures are unprocessable cases
            raise _http_error(exc, status=422) from exc
        except zipfile.BadZipFile as exc:
            raise HTTPException(status_code=400,
                                detail=f"bundle archive is not a zip file: {exc}") from exc
        return Response(content=_json_bytes({
            "session_id": session.session_id,
            "version": session.version,
            "case_id": session.snapshot.case_id,
            "n_frames": int(len(session.frames)),
            "report": session.snapshot.report,
        }), media_type="application/json")

    @app.get("/cases/{session_id}/report")
    def get_report(session_id: str):
        return Response(content=_get(session_id).report_bytes,
                        media_type="application/json")

    @app.get("/cases/{session_id}/rfc")
    def get_rfc(session_id: str):
        return Response(content=_get(session_id).rfc_bytes,
                        media_type="application/json")

    @app.get("/cases/{session_id}/coregistration")
    def get_coregistration(session_id: str):
        return Response(content=_get(session_id).coreg_bytes,
                        media_type="application/json")

    @app.get("/cases/{session_id}/heatmap.png")
    def get_heatmap(session_id: str):
        return Response(content=_get(session_id).heatmap_png, media_type="image/png")

    @app.get("/cases/{session_id}/frame/{index}.png")
    def get_frame(session_id: str, index: int):
        session = _get(session_id)
        if not 0 <= index < len(session.frames):
            raise HTTPException(status_code=404,
                                detail=f"frame {index} out of range 0..{len(session.frames) - 1}")
        buf = io.BytesIO()
        Image.fromarray(session.frames[index], mode="L").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/cases/{session_id}/simulate")
    def simulate(session_id: str, request: SimulateRequest):
        session = _get(session_id)
        try:
            plan = StentPlan(x_prox_mm=request.x_prox_mm, x_dist_mm=request.x_dist_mm,
                             d_max_mm=request.d_max_mm, edge_len_mm=request.edge_len_mm)
            result = simulate_stent(session.snapshot, plan)
        except CoroflowError as exc:
            # plan violates span or edge constraints: bad request, session intact
            raise _http_error(exc, status=400) from exc
        return Response(content=_json_bytes(_simulate_payload(session, result)),
                        media_type="application/json")

    return app


def _find_manifest_dir(root: Path) -> Path:
    """Locate the bundle directory inside an extracted archive."""
    if (root / "manifest.json").is_file():
        return root
    candidates = sorted(p.parent for p in root.rglob("manifest.json"))
    if not candidates:
        return root  # load_case reports MissingManifest with a clear message
    return candidates[0]
