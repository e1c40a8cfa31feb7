"""Command-line front end.

Subcommands::

    zenompf run SCENARIO [--norm spectral|one11] [--out CSV]
    zenompf coeffs --order K
    zenompf spectrum SCENARIO
    zenompf verify-lemmas --seed S --trials T

Exit codes: 0 success, 2 parse or validation error, 3 spectral error,
4 numerical error, 5 slope or check failure.
"""
import argparse
import sys

import numpy as np

from .errors import AcceptanceFailure, ZenoError
from .harness import (LEMMA_TOL, RunReport, lemma_suite, projector_crosscheck, run,
                      summary_path, write_csv, write_summary)
from .multiproduct import K_MAX, vandermonde_coeffs_exact
from .scenario import NORM_KINDS, build_system, load_scenario
from .spectral import period_of_phases

EXIT_OK = 0
EXIT_USAGE = 2


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _order(text):
    value = int(text)
    if not 0 <= value <= K_MAX:
        raise argparse.ArgumentTypeError(f"K must lie in [0, {K_MAX}], got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zenompf",
                                     description="Zeno products and multi-product formulas.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="sweep a scenario and write CSV plus summary JSON")
    p_run.add_argument("scenario")
    p_run.add_argument("--norm", choices=NORM_KINDS, default=None)
    p_run.add_argument("--out", default=None, help="CSV path (overrides output_path)")

    p_coeffs = sub.add_parser("coeffs", help="print multi-product weights")
    p_coeffs.add_argument("--order", type=_order, required=True)

    p_spec = sub.add_parser("spectrum", help="peripheral spectrum and projector cross-check")
    p_spec.add_argument("scenario")

    p_lem = sub.add_parser("verify-lemmas", help="quadrature residuals of the integral identities")
    p_lem.add_argument("--seed", type=int, default=0)
    p_lem.add_argument("--trials", type=_positive_int, default=10)
    return parser


def _format_fraction(f):
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def cmd_coeffs(args, out=None):
    out = out or sys.stdout
    coeffs = vandermonde_coeffs_exact(args.order)
    print(", ".join(_format_fraction(c) for c in coeffs), file=out)
    print(", ".join(f"{float(c):.17g}" for c in coeffs), file=out)
    return EXIT_OK


def cmd_run(args, out=None):
    out = out or sys.stdout
    sc = load_scenario(args.scenario)
    if args.norm is not None:
        sc.norm_kind = args.norm
    if args.out is not None:
        sc.output_path = args.out
    csv_path = sc.output_path
    try:
        report = run(sc)
    except ZenoError as exc:
        report = RunReport(sc.name, sc.norm_kind,
                           error={"name": type(exc).__name__, "message": str(exc)})
        write_summary(report.summary(), summary_path(csv_path))
        raise
    write_csv(report, csv_path)
    write_summary(report.summary(), summary_path(csv_path))
    for k, slope in report.slopes.items():
        shown = "exact" if slope is None else f"{slope:.4f}"
        status = "ok" if report.slope_ok(k) else "FAIL"
        print(f"K={k} slope={shown} threshold={report.thresholds[k]:.2f} {status}", file=out)
    for name, check in report.checks.items():
        if isinstance(check, dict) and "ok" in check:
            print(f"check {name}: {'ok' if check['ok'] else 'FAIL'}", file=out)
    if "cat_rotation" in report.checks:
        print(f"omega/alpha = {report.checks['cat_rotation']['omega_over_alpha']:.10g}", file=out)
    print(f"wrote {csv_path}", file=out)
    if not report.passed:
        raise AcceptanceFailure(f"scenario {sc.name} missed its slope thresholds or checks")
    return EXIT_OK


def cmd_spectrum(args, out=None):
    out = out or sys.stdout
    sc = load_scenario(args.scenario)
    model = build_system(sc)
    cross = projector_crosscheck(model.m, sc.tolerances["gap_tol"])
    split = cross["split"]
    period = period_of_phases(split.eigenvalues, q_max=int(sc.tolerances["q_max"]))
    print(f"superoperator dimension {model.m.shape[0]}", file=out)
    for lam, p in zip(split.eigenvalues, split.projectors):
        rank = int(round(np.trace(p).real))
        print(f"lambda = {lam.real:+.12f}{lam.imag:+.12f}i  rank {rank}", file=out)
    print(f"delta = {split.delta:.6g}", file=out)
    print(f"period = {period}", file=out)
    print(f"contour vs eigen projector max difference = {cross['max_difference']:.3e}", file=out)
    return EXIT_OK


def cmd_verify_lemmas(args, out=None):
    out = out or sys.stdout
    rows = lemma_suite(args.seed, args.trials)
    print(f"{'case':<12} {'chernoff':>12} {'dunford_segal':>14}", file=out)
    for r in rows:
        print(f"{r.label:<12} {r.chernoff:12.3e} {r.dunford_segal:14.3e}", file=out)
    worst = max(r.worst for r in rows)
    print(f"max residual {worst:.3e} (tolerance {LEMMA_TOL:g})", file=out)
    if worst >= LEMMA_TOL:
        raise AcceptanceFailure(f"lemma residual {worst:.3e} exceeds {LEMMA_TOL:g}")
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "coeffs": cmd_coeffs, "spectrum": cmd_spectrum,
             "verify-lemmas": cmd_verify_lemmas}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ZenoError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
