"""Angiography-derived coronary physiology toolkit.

From a binary lumen mask and a contrast cine sequence, derive a per-mm
diameter and relative flow capacity profile, a pressure-drop based flow
ratio (QFR), and interactive virtual stenting; plus the calibration and
validation statistics used to judge agreement with invasive FFR.
"""

from .cases import CaseBundle, CaseSnapshot, load_case, run_pipeline, save_case
from .errors import CoroflowError
from .estimators import QFRRegressor
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
    BranchNode,
    FlowEstimate,
    Geometry1D,
    HemoParams,
    QFRResult,
    TransitEstimate,
    compute_qfr,
    discretize,
    estimate_flow,
    loss_coefficient,
    murray_split,
)
from .phantom import LesionSpec, PhantomSpec, generate_phantom
from .rfc import LesionPattern, RFCProfile, classify_pattern, compute_rfc
from .stats import (
    AgreementReport,
    CalibrationCase,
    CalibrationResult,
    DecisionCurve,
    PairedObservation,
    ROCReport,
    agreement_stats,
    calibrate_kappa,
    decision_curve,
    load_pairs_csv,
    roc_analysis,
)
from .stenting import StentPlan, StentSimResult, apply_stent, simulate_stent

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "BranchNode",
    "CalibrationCase",
    "CalibrationResult",
    "CaseBundle",
    "CaseSnapshot",
    "Centerline",
    "CoregistrationMap",
    "CoroflowError",
    "DecisionCurve",
    "DiameterProfile",
    "FlowEstimate",
    "Geometry1D",
    "HemoParams",
    "LesionPattern",
    "LesionSpec",
    "LumenMask",
    "PairedObservation",
    "PhantomSpec",
    "QFRRegressor",
    "QFRResult",
    "ROCReport",
    "RFCProfile",
    "StentPlan",
    "StentSimResult",
    "TransitEstimate",
    "agreement_stats",
    "apply_stent",
    "build_coregistration",
    "calibrate_kappa",
    "classify_pattern",
    "compute_qfr",
    "compute_rfc",
    "decision_curve",
    "diameter_profile",
    "discretize",
    "estimate_flow",
    "estimate_reference",
    "extract_centerline",
    "generate_phantom",
    "load_case",
    "load_pairs_csv",
    "loss_coefficient",
    "murray_split",
    "roc_analysis",
    "run_pipeline",
    "save_case",
    "simulate_stent",
    "__version__",
]
