"""Command-line interface.

Subcommands: analyze one case, generate a synthetic phantom, calibrate the
flow factor on a cohort, run the validation statistics battery on a pairs
CSV, and serve the HTTP API. Exit codes: 0 success, 2 invalid input or
bundle, 3 analysis failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .errors import (
    CAUSE_INVALID_BUNDLE,
    CAUSE_INVALID_INPUT,
    CoroflowError,
    EmptyCohort,
)
from .hemodynamics import HemoParams

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_ANALYSIS_FAILED = 3

logger = logging.getLogger(__name__)


def _write_json(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _params_from_args(args) -> HemoParams:
    return HemoParams(kappa=args.kappa, p_prox_mmhg=args.p_prox)


def _cmd_analyze(args) -> int:
    from .cases import load_case, run_pipeline

    bundle = load_case(args.case_dir)
    params = _params_from_args(args) if (args.kappa_set or args.p_prox_set) else None
    snapshot = run_pipeline(bundle, params, d_ref_override=args.d_ref,
                            step_mm=args.step)
    _write_json(snapshot.report, args.out)
    return EXIT_OK


def _parse_lesion(text: str):
    from .phantom import LesionSpec

    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"lesion must be centre_mm,width_mm,depth, got {text!r}")
    centre, width, depth = (float(p) for p in parts)
    return LesionSpec(centre_mm=centre, width_mm=width, depth=depth)


def _cmd_phantom(args) -> int:
    from .cases import save_case
    from .phantom import PhantomSpec, generate_phantom

    spec = PhantomSpec(
        length_mm=args.length,
        d_ref_mm=args.d_ref,
        lesions=tuple(args.lesion or ()),
        spacing_mm=args.spacing,
        n_frames=args.frames,
        frame_interval_s=args.interval,
        front_velocity_mm_s=args.velocity,
        seed=args.seed,
        case_id=args.case_id,
    )
    bundle = generate_phantom(spec)
    bundle.reference_ffr = args.ffr
    save_case(bundle, args.out)
    print(f"wrote phantom case {bundle.case_id!r} to {args.out}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    from .cases import load_case, run_pipeline
    from .stats import CalibrationCase, calibrate_kappa

    cohort_dir = Path(args.cohort_dir)
    case_dirs = sorted(p.parent for p in cohort_dir.glob("*/manifest.json"))
    if (cohort_dir / "manifest.json").is_file():
        case_dirs.insert(0, cohort_dir)
    cases = []
    for case_dir in case_dirs:
        bundle = load_case(case_dir)
        if bundle.reference_ffr is None:
            logger.warning("skipping %s: no reference FFR recorded", case_dir)
            continue
        snapshot = run_pipeline(bundle)
        cases.append(CalibrationCase(geometry=snapshot.geometry,
                                     q_rest_m3_s=snapshot.flow.q_rest_m3_s,
                                     ffr=bundle.reference_ffr))
    if not cases:
        raise EmptyCohort(f"no case under {cohort_dir} has a reference FFR")
    result = calibrate_kappa(cases, HemoParams(p_prox_mmhg=args.p_prox))
    _write_json({"kappa": result.kappa, "rss": result.rss, "n": result.n}, args.out)
    return EXIT_OK


def _cmd_stats(args) -> int:
    from .stats import (
        agreement_stats,
        decision_curve,
        load_pairs_csv,
        roc_analysis,
        subgroup_report,
    )

    pairs = load_pairs_csv(args.pairs_csv)
    agreement = agreement_stats(pairs)
    roc = roc_analysis(pairs, threshold=args.threshold)
    curve = decision_curve(pairs)
    payload = {
        "n": agreement.n,
        "agreement": {
            "r": agreement.r,
            "r_ci95": list(agreement.r_ci95) if agreement.r_ci95 else None,
            "bias": agreement.bias,
            "loa": list(agreement.loa),
            "mae": agreement.mae,
            "rmse": agreement.rmse,
            "slope": agreement.slope,
            "intercept": agreement.intercept,
        },
        "diagnostic": {
            "prevalence": roc.prevalence,
            "auroc": roc.auroc,
            "auroc_ci95": list(roc.auroc_ci95),
            "threshold": roc.threshold,
            "confusion": {"tp": roc.tp, "fp": roc.fp, "tn": roc.tn, "fn": roc.fn},
            "sensitivity": roc.sensitivity,
            "specificity": roc.specificity,
            "ppv": roc.ppv,
            "npv": roc.npv,
            "accuracy": roc.accuracy,
            "ci95": {k: list(v) for k, v in roc.ci95.items()},
            "youden_threshold": roc.youden_threshold,
            "youden_j": roc.youden_j,
        },
        "decision_curve": {
            "thresholds": curve.thresholds.tolist(),
            "nb_model": curve.nb_model.tolist(),
            "nb_treat_all": curve.nb_treat_all.tolist(),
            "nb_treat_none": curve.nb_treat_none.tolist(),
        },
        "subgroups": subgroup_report(pairs),
    }
    _write_json(payload, args.out)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coroflow",
        description="Angiography-derived coronary physiology toolkit")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyse one case bundle")
    p.add_argument("case_dir", help="bundle directory with manifest.json")
    p.add_argument("--kappa", type=float, default=2.0,
                   help="rest-to-hyperaemia flow factor")
    p.add_argument("--p-prox", type=float, default=90.0, dest="p_prox",
                   help="proximal pressure in mmHg")
    p.add_argument("--d-ref", type=float, default=None, dest="d_ref",
                   help="override the reference diameter (mm)")
    p.add_argument("--step", type=float, default=1.0,
                   help="profile sampling step (mm)")
    p.add_argument("--out", help="write the report JSON here instead of stdout")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("phantom", help="generate a synthetic case bundle")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.add_argument("--length", type=float, default=60.0, help="vessel length (mm)")
    p.add_argument("--d-ref", type=float, default=3.0, dest="d_ref",
                   help="healthy calibre (mm)")
    p.add_argument("--lesion", action="append", type=_parse_lesion,
                   metavar="CENTRE,WIDTH,DEPTH",
                   help="add a lesion (mm, mm, fraction); repeatable")
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--interval", type=float, default=1.0 / 15.0,
                   help="frame interval (s)")
    p.add_argument("--velocity", type=float, default=60.0,
                   help="contrast front velocity (mm/s)")
    p.add_argument("--spacing", type=float, default=0.2, help="pixel size (mm)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ffr", type=float, default=None,
                   help="record a reference FFR in the manifest")
    p.add_argument("--id", default="phantom", dest="case_id")
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("calibrate", help="fit kappa on a cohort with reference FFR")
    p.add_argument("cohort_dir", help="directory of case bundle subdirectories")
    p.add_argument("--p-prox", type=float, default=90.0, dest="p_prox")
    p.add_argument("--out", help="write the result JSON here instead of stdout")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("stats", help="validation statistics from a pairs CSV")
    p.add_argument("pairs_csv", help="CSV with columns id,qfr,ffr[,vessel,quality]")
    p.add_argument("--threshold", type=float, default=0.80,
                   help="QFR decision threshold")
    p.add_argument("--out", help="write the tables JSON here instead of stdout")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    # analyze only overrides physiology params the user actually set
    if args.command == "analyze":
        args.kappa_set = "--kappa" in argv
        args.p_prox_set = "--p-prox" in argv
    try:
        return args.func(args)
    except CoroflowError as exc:
        print(f"error ({exc.cause}): {exc}", file=sys.stderr)
        if exc.cause in (CAUSE_INVALID_BUNDLE, CAUSE_INVALID_INPUT):
            return EXIT_INVALID_INPUT
        return EXIT_ANALYSIS_FAILED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
