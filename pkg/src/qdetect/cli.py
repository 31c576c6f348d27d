"""``qdetect`` command-line interface.

Every command writes one JSON report to stdout (``--pretty`` renders the same
report as text). Exit codes: 0 success or verdict optimal, 1 verdict not
optimal, 2 input error, 3 numerical failure. ``QDETECT_LOG`` sets the stderr
log level (error, warn, info, debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .ensemble import correct_detection_probability, per_state_detection
from .errors import InputError, MaxIterations, NumericalError, QDetectError
from .lsm import certificate_from_condition, check_square_root_condition, least_squares_measurement
from .problem import encode_matrix, load_certificate, load_povm, load_problem
from .sdp import SolverOptions, make_certificate, solve_cgu, solve_gu, solve_optimal, verify_optimality
from .symmetry import cgu_gu_lsm_single_generator, cgu_lsm_generators, check_phase_commutation

log = logging.getLogger("qdetect")

EXIT_OK, EXIT_NOT_OPTIMAL, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
           "info": logging.INFO, "debug": logging.DEBUG}


def _verification_dict(v) -> dict:
    return {
        "optimal": v.optimal,
        "slacks_psd": v.slacks_psd,
        "slack_min_eigenvalues": list(v.slack_min_eigenvalues),
        "complementary_ok": v.complementary_ok,
        "complementary_residuals": list(v.complementary_residuals),
        "povm_valid": v.povm_valid,
        "povm_min_eigenvalues": list(v.povm_min_eigenvalues),
        "povm_completeness_residual": v.povm_completeness_residual,
        "p_correct": v.p_correct,
        "trace_x": v.trace_x,
    }


def _certificate_dict(cert) -> dict:
    return {"x": encode_matrix(cert.x), "trace": cert.trace}


def cmd_validate(args) -> tuple[dict, int]:
    prob = load_problem(args.file)
    e = prob.ensemble
    report = {
        "command": "validate",
        "valid": True,
        "dim": prob.dim,
        "num_states": len(e),
        "ranks": [int(f.shape[1]) for f in e.factors],
        "form": "explicit" if not prob.symmetric else ("gu" if prob.gu_spec is not None else "cgu"),
    }
    if prob.symmetric:
        report["group_order"] = prob.group.order
        report["num_generators"] = len(prob.generators)
    if prob.second_group is not None:
        pc = check_phase_commutation(prob.group, prob.second_group)
        report["second_group_order"] = prob.second_group.order
        report["phase_commuting"] = pc.commutes
    return report, EXIT_OK


def cmd_lsm(args) -> tuple[dict, int]:
    prob = load_problem(args.file)
    e = prob.ensemble
    res = least_squares_measurement(e)
    cond = check_square_root_condition(e, res, args.cond_tol)
    report = {
        "command": "lsm",
        "dim": prob.dim,
        "num_states": len(e),
        "p_correct": correct_detection_probability(e, res.povm),
        "per_state_detection": per_state_detection(e, res.povm).tolist(),
        "gram": encode_matrix(res.gram),
        "factors": [encode_matrix(mu) for mu in res.factors],
        "povm": {"operators": [encode_matrix(op) for op in res.povm]},
        "condition": {
            "condition_holds": cond.condition_holds,
            "alpha": cond.alpha,
            "max_deviation": cond.max_deviation,
        },
    }
    if prob.symmetric:
        report["lsm_generators"] = [encode_matrix(mu) for mu in cgu_lsm_generators(prob.cgu_spec)]
    if prob.second_group is not None:
        pc = check_phase_commutation(prob.group, prob.second_group)
        report["phase_commuting"] = pc.commutes
        if pc.commutes:
            mu_bar = cgu_gu_lsm_single_generator(prob.cgu_spec, prob.second_group)
            report["single_generator"] = encode_matrix(mu_bar)
            report["phases"] = pc.phases.tolist()
    if cond.condition_holds:
        cert = make_certificate(e, certificate_from_condition(e, res, cond))
        report["certificate"] = _certificate_dict(cert)
        report["verification"] = _verification_dict(verify_optimality(e, res.povm, cert))
    return report, EXIT_OK


def _optimal_report(prob, sol, form) -> dict:
    diag = {k: v for k, v in sol.diagnostics.items() if k != "history"}
    report = {
        "command": "optimal",
        "form": form,
        "dim": prob.dim,
        "num_states": len(prob.ensemble),
        "p_correct": sol.p_correct,
        "p_error": 1.0 - sol.p_correct,
        "trace_x": sol.certificate.trace,
        "duality_gap": sol.duality_gap,
        "iterations": sol.iterations,
        "diagnostics": diag,
        "povm": {"operators": [encode_matrix(op) for op in sol.povm]},
        "certificate": _certificate_dict(sol.certificate),
        "verification": _verification_dict(verify_optimality(prob.ensemble, sol.povm, sol.certificate)),
    }
    if form != "full":
        report["generators"] = [encode_matrix(p) for p in sol.generators]
    return report


def cmd_optimal(args) -> tuple[dict, int]:
    prob = load_problem(args.file)
    form = args.reduced
    if form == "auto":
        form = "full" if not prob.symmetric else ("gu" if prob.gu_spec is not None else "cgu")
    if form in ("gu", "cgu") and not prob.symmetric:
        raise InputError(f"--reduced {form} needs a problem file with group and generators")
    if form == "gu" and prob.gu_spec is None:
        raise InputError("--reduced gu needs exactly one generator; use --reduced cgu")
    opts = SolverOptions(gap_tol=args.gap_tol, max_iters=args.max_iters)
    try:
        if form == "full":
            sol = solve_optimal(prob.ensemble, opts)
        elif form == "gu":
            sol = solve_gu(prob.gu_spec, opts)
        else:
            sol = solve_cgu(prob.cgu_spec, opts)
    except MaxIterations as exc:
        report = _optimal_report(prob, exc.solution, form)
        report["status"] = "max_iterations"
        report["error"] = str(exc)
        return report, EXIT_NUMERICAL
    report = _optimal_report(prob, sol, form)
    report["status"] = "converged"
    return report, EXIT_OK


def cmd_verify(args) -> tuple[dict, int]:
    prob = load_problem(args.file)
    povm = load_povm(args.povm, prob.dim)
    x = load_certificate(args.cert, prob.dim)
    v = verify_optimality(prob.ensemble, povm, x, tol=args.tol, psd_tol=args.psd_tol)
    report = {"command": "verify", **_verification_dict(v)}
    return report, EXIT_OK if v.optimal else EXIT_NOT_OPTIMAL


def _format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _depth(v) -> int:
    d = 0
    while isinstance(v, list) and v:
        v = v[0]
        d += 1
    return d


def _is_matrix(v) -> bool:
    # rows of [re, im] pairs
    return _depth(v) == 3


def _format_matrix(m, indent) -> list:
    lines = []
    for row in m:
        cells = []
        for re_, im in row:
            cells.append(f"{re_:+.6f}" if im == 0 else f"{re_:+.6f}{im:+.6f}j")
        lines.append(" " * indent + "[ " + "  ".join(cells) + " ]")
    return lines


def render_pretty(report: dict, indent: int = 0) -> str:
    lines = []
    pad = " " * indent
    for key, value in report.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(render_pretty(value, indent + 2))
        elif _is_matrix(value):
            lines.append(f"{pad}{key}:")
            lines.extend(_format_matrix(value, indent + 2))
        elif _depth(value) == 4:
            for i, m in enumerate(value):
                lines.append(f"{pad}{key}[{i}]:")
                lines.extend(_format_matrix(m, indent + 2))
        elif isinstance(value, list):
            lines.append(f"{pad}{key}: " + ", ".join(_format_value(x) for x in value))
        else:
            lines.append(f"{pad}{key}: {_format_value(value)}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdetect", description="Minimum-error quantum state discrimination.")
    parser.add_argument("--version", action="version", version=f"qdetect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="problem file (JSON)")
        p.add_argument("--pretty", action="store_true", help="human-readable output")
        p.add_argument("--timing", action="store_true", help="include elapsed time in the report")

    p = sub.add_parser("validate", help="parse and validate a problem file")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("lsm", help="least-squares measurement and its optimality condition")
    common(p)
    p.add_argument("--cond-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_lsm)

    p = sub.add_parser("optimal", help="optimal measurement by semidefinite programming")
    common(p)
    p.add_argument("--reduced", choices=["auto", "full", "gu", "cgu"], default="auto")
    p.add_argument("--gap-tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=200)
    p.set_defaults(func=cmd_optimal)

    p = sub.add_parser("verify", help="check a measurement and certificate for optimality")
    common(p)
    p.add_argument("--povm", required=True, help="JSON with 'operators' (or a report containing 'povm')")
    p.add_argument("--cert", required=True, help="JSON with 'x' (or a report containing 'certificate')")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--psd-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify)
    return parser


def _configure_logging():
    level = _LEVELS.get(os.environ.get("QDETECT_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    start = time.perf_counter()
    try:
        report, code = args.func(args)
    except InputError as exc:
        print(f"qdetect: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"qdetect: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QDetectError as exc:
        print(f"qdetect: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.timing:
        report["elapsed_seconds"] = time.perf_counter() - start
    if args.pretty:
        print(render_pretty(report))
    else:
        print(json.dumps(report, indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
