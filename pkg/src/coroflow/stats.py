"""Calibration and validation statistics for QFR-vs-FFR cohorts.

Covers the rest-to-hyperaemia factor calibration (golden-section least
squares), paired agreement metrics (correlation, Bland-Altman, error
magnitudes, ordinary least squares), diagnostic performance against the
ischaemia reference (AUROC with DeLong variance, Wilson intervals, Youden
threshold), and decision-curve net benefit.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.linear_model import LogisticRegression

from .errors import (
    DegenerateLabels,
    EmptyCohort,
    InconsistentInputs,
    InsufficientData,
    NoInteriorMinimum,
    SchemaViolation,
    ZeroVariance,
)
from .hemodynamics import Geometry1D, HemoParams, compute_qfr

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

# Ischaemia reference threshold on FFR, and the matching QFR decision cut.
ISCHAEMIA_THRESHOLD = 0.80
Z_95 = 1.959963984540054

KAPPA_SEARCH_RANGE = (0.5, 5.0)
KAPPA_TOLERANCE = 1e-4

DECISION_PT_RANGE = (0.20, 0.70)


@dataclass(frozen=True)
class PairedObservation:
    """One vessel with both an image-derived and an invasive measurement."""

    case_id: str
    qfr: float
    ffr: float
    vessel: Optional[str] = None
    quality: Optional[str] = None

    def __post_init__(self):
        for name, value in (("qfr", self.qfr), ("ffr", self.ffr)):
            if not (0.0 < value <= 1.2):
                raise InconsistentInputs(
                    f"{name} must lie in (0, 1.2], got {value!r} for case {self.case_id!r}")


@dataclass(frozen=True)
class AgreementReport:
    n: int
    r: float
    r_ci95: Optional[Tuple[float, float]]
    bias: float                      # mean(qfr - ffr)
    loa: Tuple[float, float]         # bias +/- 1.96 * sd of differences
    mae: float
    rmse: float
    slope: float
    intercept: float


@dataclass(frozen=True)
class ROCReport:
    n: int
    prevalence: float
    auroc: float
    auroc_ci95: Tuple[float, float]
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    sensitivity: float
    specificity: float
    ppv: float
    npv: float
    accuracy: float
    ci95: Dict[str, Tuple[float, float]]
    youden_threshold: float
    youden_j: float


@dataclass(frozen=True)
class DecisionCurve:
    thresholds: np.ndarray
    nb_model: np.ndarray
    nb_treat_all: np.ndarray
    nb_treat_none: np.ndarray
    prevalence: float
    n: int


@dataclass(frozen=True)
class CalibrationCase:
    """Minimum inputs to re-evaluate one case's QFR as kappa varies."""

    geometry: Geometry1D
    q_rest_m3_s: float
    ffr: float


@dataclass(frozen=True)
class CalibrationResult:
    kappa: float
    rss: float
    n: int
    trace: Tuple[Tuple[float, float], ...] = field(repr=False, default=())


def load_pairs_csv(path) -> List[PairedObservation]:
    """Read paired observations from a CSV with columns id,qfr,ffr[,vessel,quality].

    Raises:
        SchemaViolation: Missing required columns or an unparsable row; the
            message names the field and row.
    """
    pairs: List[PairedObservation] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = set(reader.fieldnames or ())
        for col in ("id", "qfr", "ffr"):
            if col not in header:
                raise SchemaViolation(f"pairs CSV is missing required column {col!r}")
        for i, row in enumerate(reader, start=2):
            try:
                pairs.append(PairedObservation(
                    case_id=row["id"],
                    qfr=float(row["qfr"]),
                    ffr=float(row["ffr"]),
                    vessel=(row.get("vessel") or None),
                    quality=(row.get("quality") or None),
                ))
            except (TypeError, ValueError, InconsistentInputs) as exc:
                raise SchemaViolation(f"pairs CSV row {i}: {exc}") from exc
    return pairs


def _arrays(pairs: Sequence[PairedObservation]) -> Tuple[np.ndarray, np.ndarray]:
    qfr = np.array([p.qfr for p in pairs], dtype=float)
    ffr = np.array([p.ffr for p in pairs], dtype=float)
    return qfr, ffr


def agreement_stats(pairs: Sequence[PairedObservation]) -> AgreementReport:
    """Paired agreement between QFR and FFR.

    Pearson r with a Fisher-z interval (n >= 4, otherwise None), Bland-Altman
    bias and limits of agreement using the sample standard deviation, mean
    absolute and root-mean-square error, and the least-squares line of QFR on
    FFR.

    Raises:
        InsufficientData: Fewer than two pairs.
        ZeroVariance: Either series is constant.
    """
    if len(pairs) < 2:
        raise InsufficientData(f"need at least 2 pairs, got {len(pairs)}")
    qfr, ffr = _arrays(pairs)
    n = len(pairs)
    if np.ptp(qfr) == 0.0 or np.ptp(ffr) == 0.0:
        raise ZeroVariance("correlation undefined: a series is constant")

    r = float(np.corrcoef(ffr, qfr)[0, 1])
    if n >= 4:
        with np.errstate(divide="ignore"):
            z = np.arctanh(min(max(r, -1.0), 1.0))
        se = 1.0 / math.sqrt(n - 3)
        r_ci: Optional[Tuple[float, float]] = (
            float(np.tanh(z - Z_95 * se)), float(np.tanh(z + Z_95 * se)))
    else:
        r_ci = None

    diff = qfr - ffr
    bias = float(diff.mean())
    sd = float(diff.std(ddof=1))
    loa = (bias - Z_95 * sd, bias + Z_95 * sd)
    mae = float(np.abs(diff).mean())
    rmse = float(np.sqrt((diff ** 2).mean()))
    slope, intercept = np.polyfit(ffr, qfr, 1)
    return AgreementReport(n=n, r=r, r_ci95=r_ci, bias=bias, loa=loa, mae=mae,
                           rmse=rmse, slope=float(slope), intercept=float(intercept))


def _midrank(x: np.ndarray) -> np.ndarray:
    """Ranks with ties sharing the mean rank (1-based)."""
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.zeros(len(x))
    i = 0
    while i < len(x):
        j = i
        while j < len(x) and xs[j] == xs[i]:
            j += 1
        ranks[i:j] = 0.5 * (i + j - 1) + 1.0
        i = j
    out = np.empty(len(x))
    out[order] = ranks
    return out


def delong_auc(scores_pos: np.ndarray, scores_neg: np.ndarray) -> Tuple[float, float]:
    """AUROC and its DeLong variance from positive/negative score samples.

    The midrank formulation credits ties with 0.5, matching the
    Mann-Whitney estimator exactly.
    """
    m, n = len(scores_pos), len(scores_neg)
    if m == 0 or n == 0:
        raise DegenerateLabels("need both positive and negative cases")
    tx = _midrank(scores_pos)
    ty = _midrank(scores_neg)
    tz = _midrank(np.concatenate([scores_pos, scores_neg]))
    auc = (tz[:m].sum() - m * (m + 1) / 2.0) / (m * n)
    v01 = (tz[:m] - tx) / n
    v10 = 1.0 - (tz[m:] - ty) / m
    sx = v01.var(ddof=1) if m > 1 else 0.0
    sy = v10.var(ddof=1) if n > 1 else 0.0
    return float(auc), float(sx / m + sy / n)


def wilson_ci(successes: int, total: int, z: float = Z_95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total == 0:
        return (0.0, 1.0)
    p = successes / total
    denom = 1.0 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


def _confusion(qfr: np.ndarray, labels: np.ndarray, threshold: float):
    calls = qfr <= threshold
    tp = int(np.sum(calls & labels))
    fp = int(np.sum(calls & ~labels))
    tn = int(np.sum(~calls & ~labels))
    fn = int(np.sum(~calls & labels))
    return tp, fp, tn, fn


def youden_threshold(qfr: np.ndarray, labels: np.ndarray,
                     prefer: float = ISCHAEMIA_THRESHOLD) -> Tuple[float, float]:
    """QFR cut maximising sensitivity + specificity - 1.

    Candidate cuts are the observed QFR values; exact ties in J are broken
    towards the cut closest to the conventional decision threshold.
    """
    m = int(labels.sum())
    n = int((~labels).sum())
    if m == 0 or n == 0:
        raise DegenerateLabels("Youden threshold needs both classes")
    best: Optional[Tuple[float, float]] = None
    for t in np.unique(qfr):
        tp, fp, tn, fn = _confusion(qfr, labels, float(t))
        j = tp / m + tn / n - 1.0
        if best is None or j > best[1] + 1e-12 or (
                abs(j - best[1]) <= 1e-12 and abs(t - prefer) < abs(best[0] - prefer)):
            best = (float(t), j)
    return best


def roc_analysis(pairs: Sequence[PairedObservation],
                 threshold: float = ISCHAEMIA_THRESHOLD,
                 ffr_cut: float = ISCHAEMIA_THRESHOLD) -> ROCReport:
    """Diagnostic performance of QFR against the FFR ischaemia reference.

    Positivity is FFR <= ffr_cut; the score orders cases by 1 - QFR so
    higher means more likely ischaemic. Sensitivity, specificity and
    predictive values are evaluated at ``qfr <= threshold`` with Wilson
    intervals; the AUROC interval is the DeLong normal approximation
    clipped to [0, 1].

    Raises:
        InsufficientData: Fewer than two pairs.
        DegenerateLabels: Only one class present.
    """
    if len(pairs) < 2:
        raise InsufficientData(f"need at least 2 pairs, got {len(pairs)}")
    qfr, ffr = _arrays(pairs)
    labels = ffr <= ffr_cut
    if labels.all() or not labels.any():
        raise DegenerateLabels("cohort has a single outcome class")

    scores = 1.0 - qfr
    auc, var = delong_auc(scores[labels], scores[~labels])
    half = Z_95 * math.sqrt(var)
    auroc_ci = (max(0.0, auc - half), min(1.0, auc + half))

    tp, fp, tn, fn = _confusion(qfr, labels, threshold)
    sens = tp / (tp + fn)
    spec = tn / (tn + fp)
    ppv = tp / (tp + fp) if tp + fp else 0.0
    npv = tn / (tn + fn) if tn + fn else 0.0
    acc = (tp + tn) / len(pairs)
    ci = {
        "sensitivity": wilson_ci(tp, tp + fn),
        "specificity": wilson_ci(tn, tn + fp),
        "ppv": wilson_ci(tp, tp + fp),
        "npv": wilson_ci(tn, tn + fn),
        "accuracy": wilson_ci(tp + tn, len(pairs)),
    }
    y_thr, y_j = youden_threshold(qfr, labels)
    return ROCReport(n=len(pairs), prevalence=float(labels.mean()), auroc=auc,
                     auroc_ci95=auroc_ci, threshold=threshold, tp=tp, fp=fp, tn=tn,
                     fn=fn, sensitivity=sens, specificity=spec, ppv=ppv, npv=npv,
                     accuracy=acc, ci95=ci, youden_threshold=y_thr, youden_j=y_j)


def net_benefit(labels: np.ndarray, calls: np.ndarray, pt: float) -> float:
    """Net benefit of a set of positive calls at threshold probability pt."""
    if not 0.0 < pt < 1.0:
        raise InconsistentInputs(f"threshold probability must be in (0, 1), got {pt}")
    n = len(labels)
    tp = float(np.sum(calls & labels))
    fp = float(np.sum(calls & ~labels))
    return tp / n - fp / n * pt / (1.0 - pt)


def decision_curve(pairs: Sequence[PairedObservation],
                   thresholds: Optional[np.ndarray] = None,
                   ffr_cut: float = ISCHAEMIA_THRESHOLD) -> DecisionCurve:
    """Net benefit of acting on the model across threshold probabilities.

    QFR is mapped to an ischaemia probability with a logistic model on
    1 - QFR fitted to the cohort labels; treat-all and treat-none references
    use the cohort prevalence. The default grid spans the plausible range of
    revascularisation thresholds.
    """
    if thresholds is None:
        thresholds = np.round(np.arange(DECISION_PT_RANGE[0],
                                        DECISION_PT_RANGE[1] + 1e-9, 0.02), 10)
    if len(pairs) < 2:
        raise InsufficientData(f"need at least 2 pairs, got {len(pairs)}")
    qfr, ffr = _arrays(pairs)
    labels = ffr <= ffr_cut
    if labels.all() or not labels.any():
        raise DegenerateLabels("cohort has a single outcome class")

    x = (1.0 - qfr).reshape(-1, 1)
    model = LogisticRegression(penalty=None, solver="lbfgs", max_iter=10000)
    model.fit(x, labels.astype(int))
    probs = model.predict_proba(x)[:, 1]

    prev = float(labels.mean())
    nb_model = np.array([net_benefit(labels, probs >= pt, pt) for pt in thresholds])
    odds = thresholds / (1.0 - thresholds)
    nb_all = prev - (1.0 - prev) * odds
    return DecisionCurve(thresholds=np.asarray(thresholds, dtype=float),
                         nb_model=nb_model, nb_treat_all=nb_all,
                         nb_treat_none=np.zeros_like(nb_model), prevalence=prev,
                         n=len(pairs))


def golden_section_minimize(f: Callable[[float], float], lo: float, hi: float,
                            tol: float = KAPPA_TOLERANCE,
                            ) -> Tuple[float, List[Tuple[float, float]]]:
    """Minimise a unimodal function on [lo, hi] to within tol.

    Returns the estimated minimiser and the bracket trace; each bracket is
    the golden ratio times the width of the previous one.
    """
    if not hi > lo:
        raise InconsistentInputs(f"search interval must satisfy lo < hi, got [{lo}, {hi}]")
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    trace = [(a, b)]
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        trace.append((a, b))
    x = c if fc < fd else d
    return float(x), trace


def calibrate_kappa(cases: Sequence[CalibrationCase], params: HemoParams,
                    search: Tuple[float, float] = KAPPA_SEARCH_RANGE,
                    tol: float = KAPPA_TOLERANCE) -> CalibrationResult:
    """Fit the rest-to-hyperaemia factor by least squares against FFR.

    Minimises sum((qfr_i(kappa) - ffr_i)^2) over the search interval with a
    golden-section search.

    Raises:
        EmptyCohort: No calibration cases.
        NoInteriorMinimum: The optimum sits at the search boundary, meaning
            the data do not constrain kappa inside the physiologic range.
    """
    if len(cases) == 0:
        raise EmptyCohort("calibration needs at least one case with reference FFR")

    def objective(kappa: float) -> float:
        rss = 0.0
        for case in cases:
            result = compute_qfr(case.geometry, kappa * case.q_rest_m3_s, params)
            rss += (result.qfr - case.ffr) ** 2
        return rss

    kappa, trace = golden_section_minimize(objective, search[0], search[1], tol)
    if kappa - search[0] < 2 * tol or search[1] - kappa < 2 * tol:
        raise NoInteriorMinimum(
            f"kappa optimum {kappa:.4f} lies at the boundary of {search!r}")
    logger.info("calibrated kappa %.4f on %d cases", kappa, len(cases))
    return CalibrationResult(kappa=kappa, rss=objective(kappa), n=len(cases),
                             trace=tuple(trace))


def subgroup_report(pairs: Sequence[PairedObservation],
                    attribute: str = "vessel") -> List[Dict[str, object]]:
    """Per-subgroup agreement summary (count, r, bias, MAE, AUROC).

    Subgroups with too few cases or a single outcome class report None for
    the affected statistics instead of failing the whole table.
    """
    groups: Dict[str, List[PairedObservation]] = {}
    for p in pairs:
        key = getattr(p, attribute) or "unspecified"
        groups.setdefault(key, []).append(p)

    rows: List[Dict[str, object]] = []
    for name in sorted(groups):
        members = groups[name]
        row: Dict[str, object] = {"subgroup": name, "n": len(members)}
        try:
            agreement = agreement_stats(members)
            row.update(r=agreement.r, bias=agreement.bias, mae=agreement.mae)
        except (InsufficientData, ZeroVariance):
            row.update(r=None, bias=None, mae=None)
        try:
            roc = roc_analysis(members)
            row["auroc"] = roc.auroc
        except (InsufficientData, DegenerateLabels):
            row["auroc"] = None
        rows.append(row)
    return rows
