"""Estimator facade: sklearn contract, calibration recovery, prediction."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from coroflow.cases import run_pipeline, save_case
from coroflow.estimators import QFRRegressor
from coroflow.hemodynamics import HemoParams
from coroflow.phantom import LesionSpec, PhantomSpec, generate_phantom

KAPPA_STAR = 2.6


def small_phantom(depth, seed):
    return generate_phantom(PhantomSpec(
        length_mm=40.0, d_ref_mm=3.0, spacing_mm=0.25,
        lesions=(LesionSpec(20.0, 9.0, depth),),
        n_frames=14, front_velocity_mm_s=60.0,
        seed=seed, case_id=f"cal-{seed}"))


@pytest.fixture(scope="module")
def cohort():
    bundles = [small_phantom(depth, seed)
               for seed, depth in enumerate([0.30, 0.40, 0.48, 0.55])]
    # invasive reference generated by the forward model at a known factor
    ffr = [run_pipeline(b, HemoParams(kappa=KAPPA_STAR)).qfr.qfr for b in bundles]
    return bundles, ffr


def test_get_params_and_clone_round_trip():
    est = QFRRegressor(kappa=1.7, p_prox_mmhg=95.0, calibrate=False)
    params = est.get_params()
    assert params["kappa"] == 1.7
    assert params["p_prox_mmhg"] == 95.0
    dup = clone(est)
    assert dup.get_params() == params
    est.set_params(step_mm=0.5)
    assert est.get_params()["step_mm"] == 0.5


def test_fit_recovers_calibration_factor(cohort):
    bundles, ffr = cohort
    est = QFRRegressor().fit(bundles, ffr)
    assert abs(est.kappa_ - KAPPA_STAR) / KAPPA_STAR < 0.01
    assert est.rss_ < 1e-6
    assert est.n_cases_ == len(bundles)


def test_predict_matches_pipeline(cohort):
    bundles, ffr = cohort
    est = QFRRegressor().fit(bundles, ffr)
    pred = est.predict(bundles[:2])
    assert isinstance(pred, np.ndarray)
    assert pred.shape == (2,)
    direct = run_pipeline(bundles[0], HemoParams(kappa=est.kappa_)).qfr.qfr
    assert pred[0] == pytest.approx(direct, abs=1e-12)
    # calibrated predictions sit close to the forward-model reference
    assert np.allclose(pred, ffr[:2], atol=5e-3)


def test_predict_before_fit_raises(cohort):
    bundles, _ = cohort
    with pytest.raises(NotFittedError):
        QFRRegressor().predict(bundles[:1])


def test_no_calibration_passes_kappa_through(cohort):
    bundles, _ = cohort
    est = QFRRegressor(kappa=1.9, calibrate=False).fit(bundles)
    assert est.kappa_ == 1.9
    assert est.rss_ is None
    assert est.n_cases_ == len(bundles)
    pred = est.predict(bundles[:1])
    assert 0.0 < pred[0] <= 1.0


def test_fit_argument_errors(cohort):
    bundles, ffr = cohort
    with pytest.raises(ValueError, match="requires reference FFR"):
        QFRRegressor().fit(bundles)
    with pytest.raises(ValueError, match="disagree in length"):
        QFRRegressor().fit(bundles, ffr[:-1])


def test_accepts_bundle_directories(cohort, tmp_path):
    bundles, _ = cohort
    path = save_case(bundles[0], tmp_path / "case")
    est = QFRRegressor(calibrate=False).fit([path])
    from_path = est.predict([str(path)])
    from_memory = est.predict([bundles[0]])
    assert from_path[0] == pytest.approx(from_memory[0], abs=1e-12)


def test_analyze_returns_full_snapshot(cohort):
    bundles, ffr = cohort
    est = QFRRegressor().fit(bundles, ffr)
    snap = est.analyze(bundles[0])
    assert snap.flow.kappa == pytest.approx(est.kappa_)
    assert snap.report["params"]["kappa"] == pytest.approx(est.kappa_)
