"""Scikit-learn style facade over the analysis pipeline.

``QFRRegressor`` treats case bundles as samples: ``fit`` calibrates the
rest-to-hyperaemia factor against invasive FFR, ``predict`` returns the
image-derived QFR per case. Inputs may be bundle directories or in-memory
``CaseBundle`` objects, so the estimator composes with the usual sklearn
model-selection tooling.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .cases import CaseBundle, CaseSnapshot, load_case, run_pipeline
from .hemodynamics import HemoParams
from .stats import (
    KAPPA_SEARCH_RANGE,
    KAPPA_TOLERANCE,
    CalibrationCase,
    calibrate_kappa,
)


def _as_bundle(x) -> CaseBundle:
    if isinstance(x, CaseBundle):
        return x
    return load_case(x)


class QFRRegressor(BaseEstimator, RegressorMixin):
    """Predict QFR from case bundles, optionally calibrating kappa on FFR.

    Parameters:
        kappa: Rest-to-hyperaemia flow factor used when not calibrating.
        mu: Blood viscosity in Pa*s.
        rho: Blood density in kg/m^3.
        p_prox_mmhg: Proximal pressure when the bundle does not record one.
        calibrate: Fit kappa by least squares against y during ``fit``.
        search: Inclusive kappa search interval for calibration.
        tol: Golden-section convergence tolerance.
        step_mm: Diameter profile sampling step.

    Attributes (after fit):
        kappa_: Calibrated (or passed-through) flow factor.
        n_cases_: Number of training cases.
        rss_: Residual sum of squares at kappa_ (None when not calibrated).
    """

    def __init__(self, kappa: float = 2.0, mu: float = 3.5e-3, rho: float = 1060.0,
                 p_prox_mmhg: float = 90.0, calibrate: bool = True,
                 search: Tuple[float, float] = KAPPA_SEARCH_RANGE,
                 tol: float = KAPPA_TOLERANCE, step_mm: float = 1.0):
        self.kappa = kappa
        self.mu = mu
        self.rho = rho
        self.p_prox_mmhg = p_prox_mmhg
        self.calibrate = calibrate
        self.search = search
        self.tol = tol
        self.step_mm = step_mm

    def _params(self, kappa: Optional[float] = None) -> HemoParams:
        return HemoParams(mu=self.mu, rho=self.rho, p_prox_mmhg=self.p_prox_mmhg,
                          kappa=self.kappa if kappa is None else kappa)

    def _snapshot(self, x, kappa: Optional[float] = None) -> CaseSnapshot:
        return run_pipeline(_as_bundle(x), self._params(kappa), step_mm=self.step_mm)

    def fit(self, X: Sequence, y=None) -> "QFRRegressor":
        """Analyse the training cases and, if enabled, calibrate kappa on y.

        Args:
            X: Case bundles or bundle directories.
            y: Reference FFR per case; required when calibrate=True.
        """
        if self.calibrate:
            if y is None:
                raise ValueError("calibrate=True requires reference FFR values y")
            y = np.asarray(y, dtype=float)
            if len(y) != len(X):
                raise ValueError(f"X and y disagree in length ({len(X)} vs {len(y)})")
            snapshots = [self._snapshot(x) for x in X]
            cases = [CalibrationCase(geometry=s.geometry,
                                     q_rest_m3_s=s.flow.q_rest_m3_s, ffr=float(ffr))
                     for s, ffr in zip(snapshots, y)]
            result = calibrate_kappa(cases, self._params(), search=self.search,
                                     tol=self.tol)
            self.kappa_ = result.kappa
            self.rss_ = result.rss
            self.n_cases_ = len(cases)
        else:
            self.kappa_ = float(self.kappa)
            self.rss_ = None
            self.n_cases_ = len(X)
        return self

    def predict(self, X: Sequence) -> np.ndarray:
        """QFR for each case, using the fitted kappa."""
        if not hasattr(self, "kappa_"):
            raise NotFittedError("QFRRegressor must be fitted before predict")
        return np.array([self._snapshot(x, kappa=self.kappa_).qfr.qfr for x in X])

    def analyze(self, x) -> CaseSnapshot:
        """Full snapshot for one case at the fitted (or default) kappa."""
        kappa = getattr(self, "kappa_", None)
        return self._snapshot(x, kappa=kappa)
