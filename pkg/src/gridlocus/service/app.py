"""FastAPI application exposing the diagnostic pipelines."""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import CaseError, NotConverged
from ..network import case_to_dict, import_matpower
from . import handlers
from .schemas import (
    ConvertRequest,
    HealthReport,
    LocalizeReport,
    LocalizeRequest,
    SolveReport,
    SolveRequest,
    SweepReport,
    SweepRequest,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="gridlocus",
        version=__version__,
        description=(
            "AC load-flow solvability diagnostics: solve cases and localize "
            "the buses behind infeasibility via loss-regularized residual "
            "minimization."
        ),
    )

    @app.get("/health", response_model=HealthReport)
    def health() -> HealthReport:
        return HealthReport(status="ok", version=__version__)

    @app.post("/solve", response_model=SolveReport)
    def solve(req: SolveRequest) -> SolveReport:
        if req.tol <= 0 or req.max_iter < 1:
            raise HTTPException(400, "tol must be > 0 and max_iter >= 1")
        case = _case(req.case)
        return handlers.run_solve(case, tol=req.tol, max_iter=req.max_iter)

    @app.post("/localize", response_model=LocalizeReport)
    def localize(req: LocalizeRequest) -> LocalizeReport:
        if req.alpha <= 0 or req.h_step <= 0:
            raise HTTPException(400, "alpha and h_step must be positive")
        case = _case(req.case)
        try:
            return handlers.run_localize(case, req.alpha, req.h_step)
        except NotConverged as exc:
            raise HTTPException(500, f"minimization failed: {exc}") from exc

    @app.post("/sweep", response_model=SweepReport)
    def sweep(req: SweepRequest) -> SweepReport:
        if not req.alphas or any(a <= 0 for a in req.alphas) or req.h_step <= 0:
            raise HTTPException(400, "alphas must be non-empty and positive")
        if len(set(req.alphas)) != len(req.alphas):
            raise HTTPException(400, "alphas must be distinct")
        case = _case(req.case)
        return handlers.run_sweep(case, req.alphas, req.h_step)

    @app.post("/convert")
    def convert(req: ConvertRequest) -> dict:
        try:
            return case_to_dict(import_matpower(req.text))
        except CaseError as exc:
            raise HTTPException(400, str(exc)) from exc

    return app


def _case(model):
    try:
        return handlers.case_from_model(model)
    except CaseError as exc:
        raise HTTPException(400, str(exc)) from exc


app = create_app()
