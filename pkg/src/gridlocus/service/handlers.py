"""Pipeline handlers shared by the HTTP routes and the CLI.

Each handler takes core objects, runs one diagnostic pipeline, and returns
a response model. All payloads use external bus ids and deterministic
ordering so repeated runs are byte-identical.
"""
from __future__ import annotations

import numpy as np

from ..errors import SingularJacobian
from ..loadflow import (
    NewtonResult,
    case_injections,
    complex_voltages,
    flat_start,
    mismatch,
    newton_solve,
)
from ..localizer import Diagnosis, alpha_sweep, diagnose
from ..loss import loss_grad_injections
from ..network import GridCase, case_from_dict
from ..regularizer import DEFAULT_GRAD_TOL
from .schemas import (
    BusVoltage,
    CaseIn,
    DiagnosisBusRow,
    DiagnosisReport,
    LocalizeReport,
    MlcRow,
    RankEntry,
    SolveReport,
    SweepEntryReport,
    SweepReport,
    _none_if_nan,
)

LOCALIZE_MAX_ITER = 200


def case_from_model(model: CaseIn) -> GridCase:
    return case_from_dict(model.as_document())


def solve_report(
    case: GridCase, result: NewtonResult, failure: str | None = None
) -> SolveReport:
    u_full = complex_voltages(case, result.state)
    buses = [
        BusVoltage(
            id=case.external_ids[i],
            u=float(u_full[i].real),
            v=float(u_full[i].imag),
            vm=float(abs(u_full[i])),
            angle=float(np.angle(u_full[i])),
        )
        for i in range(len(case.buses))
    ]
    return SolveReport(
        converged=result.converged,
        iterations=result.iterations,
        residual_inf=result.residual_inf,
        residual_history=list(result.residual_history),
        buses=buses,
        failure=failure,
    )


def _probe(case: GridCase, s, **kwargs) -> tuple[NewtonResult, str | None]:
    """Newton solve that degrades a singular-Jacobian abort into an ordinary
    non-converged result (it signals infeasibility, the pipeline's business)."""
    try:
        return newton_solve(case, s, **kwargs), None
    except SingularJacobian as exc:
        start = flat_start(case)
        norm = float(np.max(np.abs(mismatch(case, start, s).f))) if case.n else 0.0
        return NewtonResult(start, False, 0, norm, (norm,)), str(exc)


def run_solve(case: GridCase, tol: float = 1e-8, max_iter: int = 20) -> SolveReport:
    result, failure = _probe(case, case_injections(case), tol=tol, max_iter=max_iter)
    return solve_report(case, result, failure)


def mlc_rows(case: GridCase, mlc: np.ndarray) -> list[MlcRow]:
    n = case.n
    return [
        MlcRow(id=case.external_ids[i + 1], mlc_p=float(mlc[i]), mlc_q=float(mlc[n + i]))
        for i in range(n)
    ]


def diagnosis_report(case: GridCase, diag: Diagnosis) -> DiagnosisReport:
    n = case.n
    sp = diag.stationary
    buses = [
        DiagnosisBusRow(
            id=case.external_ids[i + 1],
            delta_p=float(diag.residual_profile[i, 0]),
            delta_q=float(diag.residual_profile[i, 1]),
            mlc_p=float(diag.mlc_profile[i, 0]),
            mlc_q=float(diag.mlc_profile[i, 1]),
            s_bar_p=float(diag.s_bar.p[i]),
            s_bar_q=float(diag.s_bar.q[i]),
        )
        for i in range(n)
    ]
    ranking = [
        RankEntry(id=bus, score=score)
        for bus, score in zip(diag.ranking, diag.ranking_scores)
    ]
    return DiagnosisReport(
        alpha=diag.alpha,
        classification=diag.classification,
        min_eig_loss_hessian=_none_if_nan(diag.min_eig_loss_hessian),
        min_eig_local_optimality=_none_if_nan(diag.min_eig_local_optimality),
        hessian_asymmetry=_none_if_nan(diag.hessian_asymmetry),
        hessian_error=diag.hessian_error,
        v_min=diag.v_min,
        objective=sp.objective,
        grad_norm=sp.grad_norm,
        iterations=sp.iterations,
        jac_condition=sp.jac_condition,
        residual_inf=float(np.max(np.abs(sp.residual.f))),
        loss=diag.sensitivities.value,
        buses=buses,
        ranking=ranking,
    )


def run_localize(
    case: GridCase, alpha: float, h_step: float = 1e-5
) -> LocalizeReport:
    """Solve; on success report the solution with marginal loss coefficients,
    otherwise minimize the regularized objective and report the Diagnosis.

    Raises NotConverged when the minimization itself fails to reach
    stationarity (the method failed, as opposed to diagnosing the case).
    """
    s = case_injections(case)
    result, _ = _probe(case, s)
    if result.converged:
        sens = loss_grad_injections(case, result.state)
        return LocalizeReport(
            status="feasible",
            solution=solve_report(case, result),
            loss=sens.value,
            mlc=mlc_rows(case, sens.mlc),
        )
    diag = diagnose(
        case, s, alpha, h_step, grad_tol=DEFAULT_GRAD_TOL, max_iter=LOCALIZE_MAX_ITER
    )
    return LocalizeReport(status="diagnosed", diagnosis=diagnosis_report(case, diag))


def run_sweep(
    case: GridCase,
    alphas: list[float],
    h_step: float = 1e-5,
    max_workers: int | None = None,
) -> SweepReport:
    s = case_injections(case)
    feasible = _probe(case, s)[0].converged
    sweep = alpha_sweep(
        case,
        s,
        tuple(alphas),
        h_step=h_step,
        grad_tol=DEFAULT_GRAD_TOL,
        max_iter=LOCALIZE_MAX_ITER,
        max_workers=max_workers,
    )
    entries = []
    for entry in sweep.entries:
        if entry.diagnosis is not None:
            entries.append(
                SweepEntryReport(
                    alpha=entry.alpha,
                    status="ok",
                    diagnosis=diagnosis_report(case, entry.diagnosis),
                )
            )
        else:
            entries.append(
                SweepEntryReport(alpha=entry.alpha, status="failed", error=entry.error)
            )
    return SweepReport(feasible=feasible, stability=sweep.stability, entries=entries)
