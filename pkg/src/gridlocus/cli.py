"""Command-line client for the diagnostic pipelines.

Data goes to stdout, progress to stderr, so payloads pipe cleanly into
plotting scripts. Exit codes: 0 success, 1 infeasibility diagnosed (the
tool's primary successful diagnostic outcome), 2 input error, 3 the method
itself failed.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import CaseError, GridLocusError, NotConverged
from .network import import_matpower, parse_case, serialize_case
from .service import handlers
from .service.schemas import (
    DEFAULT_SWEEP_ALPHAS,
    DiagnosisReport,
    LocalizeReport,
    SolveReport,
    SweepReport,
)

EXIT_OK = 0
EXIT_DIAGNOSED = 1
EXIT_INPUT_ERROR = 2
EXIT_FAILED = 3

_SWEEP_CSV_HEADER = (
    "alpha,external_bus_id,delta_p,delta_q,mlc_p,mlc_q,s_bar_p,s_bar_q,rank,status"
)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _read_case(path: str):
    text = Path(path).read_text()
    return parse_case(text)


def _solve_csv(report: SolveReport) -> str:
    lines = ["external_id,u,v,vm,angle_rad"]
    for b in report.buses:
        lines.append(f"{b.id},{b.u!r},{b.v!r},{b.vm!r},{b.angle!r}")
    return "\n".join(lines) + "\n"


def _residual_history_csv(report: SolveReport) -> str:
    lines = ["iter,residual_inf"]
    for i, r in enumerate(report.residual_history):
        lines.append(f"{i},{r!r}")
    return "\n".join(lines) + "\n"


def _mlc_csv(report: LocalizeReport) -> str:
    lines = ["external_bus_id,mlc_p,mlc_q"]
    for row in report.mlc or []:
        lines.append(f"{row.id},{row.mlc_p!r},{row.mlc_q!r}")
    return "\n".join(lines) + "\n"


def _diagnosis_csv_rows(diag: DiagnosisReport, status: str) -> list[str]:
    rank_of = {entry.id: pos + 1 for pos, entry in enumerate(diag.ranking)}
    rows = []
    for b in diag.buses:
        rows.append(
            f"{diag.alpha!r},{b.id},{b.delta_p!r},{b.delta_q!r},"
            f"{b.mlc_p!r},{b.mlc_q!r},{b.s_bar_p!r},{b.s_bar_q!r},"
            f"{rank_of[b.id]},{status}"
        )
    return rows


def _diagnosis_csv(diag: DiagnosisReport) -> str:
    return "\n".join([_SWEEP_CSV_HEADER] + _diagnosis_csv_rows(diag, "diagnosed")) + "\n"


def _sweep_csv(report: SweepReport) -> str:
    lines = [_SWEEP_CSV_HEADER]
    for entry in report.entries:
        if entry.diagnosis is not None:
            status = "ok" if report.feasible else "diagnosed"
            lines.extend(_diagnosis_csv_rows(entry.diagnosis, status))
        else:
            lines.append(f"{entry.alpha!r},,,,,,,,,failed")
    return "\n".join(lines) + "\n"


def _emit(payload: str) -> None:
    sys.stdout.write(payload)


def cmd_solve(args) -> int:
    case = _read_case(args.case)
    if args.tol <= 0 or args.max_iter < 1:
        _log("error: --tol must be > 0 and --max-iter >= 1")
        return EXIT_INPUT_ERROR
    report = handlers.run_solve(case, tol=args.tol, max_iter=args.max_iter)
    if args.format == "json":
        _emit(report.model_dump_json(indent=2) + "\n")
    elif report.converged:
        _emit(_solve_csv(report))
    else:
        _emit(_residual_history_csv(report))
    if report.converged:
        _log(f"converged in {report.iterations} iterations")
        return EXIT_OK
    _log(
        f"no convergence after {report.iterations} iterations "
        f"(residual {report.residual_inf:.3e})"
    )
    return EXIT_DIAGNOSED


def cmd_localize(args) -> int:
    case = _read_case(args.case)
    if args.alpha <= 0:
        _log("error: --alpha must be positive")
        return EXIT_INPUT_ERROR
    if args.h_step <= 0:
        _log("error: --h-step must be positive")
        return EXIT_INPUT_ERROR
    try:
        report = handlers.run_localize(case, args.alpha, args.h_step)
    except NotConverged as exc:
        _log(f"minimization failed: {exc}")
        return EXIT_FAILED
    if report.status == "feasible":
        if args.format == "json":
            _emit(report.model_dump_json(indent=2) + "\n")
        else:
            _emit(_mlc_csv(report))
        _log("case is feasible; reported solution and marginal loss coefficients")
        return EXIT_OK
    diag = report.diagnosis
    if args.format == "json":
        _emit(report.model_dump_json(indent=2) + "\n")
    else:
        _emit(_diagnosis_csv(diag))
    top = ", ".join(str(e.id) for e in diag.ranking[:2])
    _log(
        f"infeasibility diagnosed at alpha={diag.alpha:g}: "
        f"classification={diag.classification}, top suspects: {top}"
    )
    return EXIT_DIAGNOSED


def cmd_sweep(args) -> int:
    case = _read_case(args.case)
    try:
        alphas = [float(tok) for tok in args.alphas.split(",") if tok.strip()]
    except ValueError:
        _log(f"error: unparsable --alphas list {args.alphas!r}")
        return EXIT_INPUT_ERROR
    if not alphas or any(a <= 0 for a in alphas) or len(set(alphas)) != len(alphas):
        _log("error: --alphas must be a non-empty list of distinct positive values")
        return EXIT_INPUT_ERROR
    if args.h_step <= 0:
        _log("error: --h-step must be positive")
        return EXIT_INPUT_ERROR
    report = handlers.run_sweep(case, alphas, args.h_step)
    if args.format == "json":
        _emit(report.model_dump_json(indent=2) + "\n")
    else:
        _emit(_sweep_csv(report))
    failed = sum(1 for e in report.entries if e.status == "failed")
    _log(
        f"sweep over {len(report.entries)} alpha value(s): {failed} failed, "
        f"stability {report.stability:g}"
    )
    if failed:
        return EXIT_FAILED
    return EXIT_OK if report.feasible else EXIT_DIAGNOSED


def cmd_convert(args) -> int:
    text = Path(args.matpower).read_text()
    case = import_matpower(text)
    _emit(serialize_case(case))
    _log(f"converted {len(case.buses)} buses, {len(case.branches)} branches")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridlocus",
        description="AC load-flow solvability diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve the load flow for a case file")
    p_solve.add_argument("case", help="path to a JSON case file")
    p_solve.add_argument("--tol", type=float, default=1e-8)
    p_solve.add_argument("--max-iter", type=int, default=20)
    p_solve.add_argument("--format", choices=("json", "csv"), default="json")
    p_solve.set_defaults(func=cmd_solve)

    p_loc = sub.add_parser(
        "localize", help="diagnose an infeasible case at one regularization weight"
    )
    p_loc.add_argument("case")
    p_loc.add_argument("--alpha", type=float, default=0.1)
    p_loc.add_argument("--h-step", type=float, default=1e-5)
    p_loc.add_argument("--format", choices=("json", "csv"), default="json")
    p_loc.set_defaults(func=cmd_localize)

    p_sweep = sub.add_parser(
        "sweep", help="diagnose across a list of regularization weights"
    )
    p_sweep.add_argument("case")
    p_sweep.add_argument(
        "--alphas",
        default=",".join(repr(a) for a in DEFAULT_SWEEP_ALPHAS),
        help="comma-separated positive values",
    )
    p_sweep.add_argument("--h-step", type=float, default=1e-5)
    p_sweep.add_argument("--format", choices=("json", "csv"), default="json")
    p_sweep.set_defaults(func=cmd_sweep)

    p_conv = sub.add_parser(
        "convert", help="convert a MATPOWER-style case file to the native JSON format"
    )
    p_conv.add_argument("matpower")
    p_conv.set_defaults(func=cmd_convert)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        _log(f"error: cannot read {exc.filename!r}")
        return EXIT_INPUT_ERROR
    except CaseError as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT_ERROR
    except NotConverged as exc:
        _log(f"error: {exc}")
        return EXIT_FAILED
    except GridLocusError as exc:
        _log(f"internal failure: {type(exc).__name__}: {exc}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
