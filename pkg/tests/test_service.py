"""HTTP API: session lifecycle, byte-stable payloads, error mapping."""

import io
import json
import zipfile

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from coroflow.cases import save_case
from coroflow.phantom import LesionSpec, PhantomSpec, generate_phantom
from coroflow.service import create_app


@pytest.fixture(scope="module")
def case_dir(tmp_path_factory):
    bundle = generate_phantom(PhantomSpec(
        lesions=(LesionSpec(30, 10, 0.6),), seed=6, case_id="svc"))
    return save_case(bundle, tmp_path_factory.mktemp("svc") / "case")


@pytest.fixture()
def client():
    return TestClient(create_app())


def open_session(client, case_dir, **options):
    response = client.post("/cases", json={"path": str(case_dir), **options})
    assert response.status_code == 200, response.text
    return response.json()


def test_post_by_path_returns_report(client, case_dir):
    body = open_session(client, case_dir)
    assert body["session_id"] == "s000001"
    assert body["version"] == 1
    assert body["case_id"] == "svc"
    assert body["n_frames"] == 30
    assert 0.0 < body["report"]["qfr"]["value"] < 1.0


def test_post_zip_upload_matches_path_analysis(client, case_dir):
    by_path = open_session(client, case_dir)

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for path in sorted(case_dir.iterdir()):
            zf.write(path, arcname=f"case/{path.name}")
    response = client.post(
        "/cases", files={"bundle": ("case.zip", buf.getvalue(), "application/zip")})
    assert response.status_code == 200, response.text
    uploaded = response.json()
    assert uploaded["version"] == by_path["version"] + 1
    assert uploaded["report"]["qfr"] == by_path["report"]["qfr"]
    assert uploaded["report"]["rfc"] == by_path["report"]["rfc"]


def test_repeated_gets_are_byte_identical(client, case_dir):
    sid = open_session(client, case_dir)["session_id"]
    for route in ("report", "rfc", "coregistration", "heatmap.png"):
        first = client.get(f"/cases/{sid}/{route}")
        second = client.get(f"/cases/{sid}/{route}")
        assert first.status_code == 200
        assert first.content == second.content


def test_rfc_payload(client, case_dir):
    sid = open_session(client, case_dir)["session_id"]
    rfc = client.get(f"/cases/{sid}/rfc").json()
    assert rfc["values"][rfc["nadir_index"]] == rfc["nadir_value"]
    assert all(0.0 < v <= 1.0 + 1e-9 for v in rfc["values"])


def test_coregistration_payload(client, case_dir):
    sid = open_session(client, case_dir)["session_id"]
    coreg = client.get(f"/cases/{sid}/coregistration").json()
    n = coreg["n_samples"]
    assert len(coreg["curve_to_pixel"]) == n
    p2c = coreg["pixel_to_curve"]
    assert len(p2c["rows"]) == len(p2c["cols"]) == len(p2c["sample"])
    assert max(p2c["sample"]) == n - 1
    assert min(p2c["sample"]) == 0
    # every curve sample's pixel maps back to a sample index in range
    row, col = coreg["curve_to_pixel"][0]
    assert isinstance(row, int) and isinstance(col, int)


def test_heatmap_is_indexed_png_with_black_background(client, case_dir):
    sid = open_session(client, case_dir)["session_id"]
    response = client.get(f"/cases/{sid}/heatmap.png")
    assert response.status_code == 200
    assert response.headers["content-type"] == "image/png"
    img = Image.open(io.BytesIO(response.content))
    assert img.mode == "P"
    idx = np.asarray(img)
    assert (idx == 0).sum() > 0.5 * idx.size  # background dominates
    assert idx.max() > 0                      # lumen painted
    palette = img.getpalette()
    assert palette[0:3] == [0, 0, 0]


def test_frame_round_trip_is_exact(client, case_dir):
    sid = open_session(client, case_dir)["session_id"]
    response = client.get(f"/cases/{sid}/frame/3.png")
    assert response.status_code == 200
    served = np.asarray(Image.open(io.BytesIO(response.content)))
    original = np.asarray(Image.open(case_dir / "frame_003.png"))
    assert np.array_equal(served, original)


def test_unknown_session_and_frame_are_404(client, case_dir):
    assert client.get("/cases/s999999/report").status_code == 404
    sid = open_session(client, case_dir)["session_id"]
    assert client.get(f"/cases/{sid}/frame/999.png").status_code == 404
    assert client.get(f"/cases/{sid}/frame/-1.png").status_code == 404


def test_post_without_payload_is_400(client):
    assert client.post("/cases", json={}).status_code == 400


def test_post_bad_bundle_is_422(client, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    response = client.post("/cases", json={"path": str(empty)})
    assert response.status_code == 422
    assert response.json()["detail"]["cause"] == "invalid_case_bundle"


def test_corrupt_manifest_names_the_field(client, case_dir, tmp_path):
    import shutil
    broken = tmp_path / "broken"
    shutil.copytree(case_dir, broken)
    manifest = json.loads((broken / "manifest.json").read_text())
    del manifest["frame_interval_s"]
    (broken / "manifest.json").write_text(json.dumps(manifest))
    response = client.post("/cases", json={"path": str(broken)})
    assert response.status_code == 422
    assert "frame_interval_s" in response.json()["detail"]["message"]


def test_analysis_failure_maps_to_422(client, tmp_path):
    stalled = generate_phantom(PhantomSpec(
        n_frames=8, front_velocity_mm_s=5.0, case_id="stalled"))
    path = save_case(stalled, tmp_path / "stalled")
    response = client.post("/cases", json={"path": str(path)})
    assert response.status_code == 422
    assert response.json()["detail"]["cause"] == "poor_image_quality_or_vessel_overlap"


def test_options_change_physiology(client, case_dir):
    body = open_session(client, case_dir, kappa=3.0, p_prox_mmhg=100.0)
    assert body["report"]["params"]["kappa"] == 3.0
    assert body["report"]["params"]["p_prox_mmhg"] == 100.0
    assert body["report"]["autocompleted"] is True

    with_ref = open_session(client, case_dir, d_ref_mm=3.4)
    assert with_ref["report"]["geometry"]["d_ref_mm"] == 3.4
    assert with_ref["report"]["autocompleted"] is False


def test_simulate_returns_improvement_and_is_stable(client, case_dir):
    sid = open_session(client, case_dir)["session_id"]
    plan = {"x_prox_mm": 22.0, "x_dist_mm": 38.0, "d_max_mm": 3.0}
    first = client.post(f"/cases/{sid}/simulate", json=plan)
    assert first.status_code == 200, first.text
    body = first.json()
    assert body["residual_qfr"] >= body["pre_qfr"]
    assert body["delta_qfr"] == pytest.approx(
        body["residual_qfr"] - body["pre_qfr"], abs=1e-12)
    assert min(body["post"]["rfc_values"]) >= 0.75  # lesion covered

    second = client.post(f"/cases/{sid}/simulate", json=plan)
    assert second.content == first.content

    # the session itself is untouched by simulation
    report = client.get(f"/cases/{sid}/report").json()
    assert report["qfr"]["value"] == body["pre_qfr"]


def test_simulate_invalid_plan_is_400(client, case_dir):
    sid = open_session(client, case_dir)["session_id"]
    bad_span = {"x_prox_mm": 50.0, "x_dist_mm": 10.0, "d_max_mm": 3.0}
    response = client.post(f"/cases/{sid}/simulate", json=bad_span)
    assert response.status_code == 400
    assert "span" in response.json()["detail"]["message"]

    too_short = {"x_prox_mm": 20.0, "x_dist_mm": 22.0, "d_max_mm": 3.0,
                 "edge_len_mm": 2.0}
    assert client.post(f"/cases/{sid}/simulate", json=too_short).status_code == 400

    zero_edge = {"x_prox_mm": 20.0, "x_dist_mm": 40.0, "d_max_mm": 3.0,
                 "edge_len_mm": 0.0}
    assert client.post(f"/cases/{sid}/simulate", json=zero_edge).status_code == 400


def test_simulate_flags_plan_over_branch(client, tmp_path):
    from coroflow.hemodynamics import BranchNode

    bundle = generate_phantom(PhantomSpec(
        lesions=(LesionSpec(30, 10, 0.5),),
        branch_nodes=(BranchNode(arclength_mm=25.0, daughter_radii_mm=(0.9,)),),
        seed=9, case_id="branched"))
    sid = open_session(client, save_case(bundle, tmp_path / "branched"))["session_id"]

    covering = client.post(f"/cases/{sid}/simulate", json={
        "x_prox_mm": 20.0, "x_dist_mm": 40.0, "d_max_mm": 3.2}).json()
    assert covering["flags"] == ["LimitedAccuracyBranch"]
    clear = client.post(f"/cases/{sid}/simulate", json={
        "x_prox_mm": 27.0, "x_dist_mm": 40.0, "d_max_mm": 3.2}).json()
    assert clear["flags"] == []


def test_versions_increment_per_post(client, case_dir):
    v1 = open_session(client, case_dir)["version"]
    v2 = open_session(client, case_dir)["version"]
    v3 = open_session(client, case_dir)["version"]
    assert (v2, v3) == (v1 + 1, v1 + 2)
    # old sessions remain retrievable
    assert client.get(f"/cases/s{v1:06d}/report").status_code == 200
