"""Pydantic request/response models for the HTTP service and the CLI."""
from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

DEFAULT_SWEEP_ALPHAS = [1e-3, 1e-2, 1e-1, 1.0, 10.0]


class BusIn(BaseModel):
    id: int
    kind: Literal["swing", "pq"]
    p: float | None = None
    q: float | None = None
    v_re: float | None = None
    v_im: float | None = None


class BranchIn(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    from_bus: int = Field(alias="from")
    to: int
    r: float
    x: float
    b: float = 0.0


class CaseIn(BaseModel):
    buses: list[BusIn]
    branches: list[BranchIn]

    def as_document(self) -> dict:
        doc = self.model_dump(by_alias=True, exclude_none=True)
        return doc


class SolveRequest(BaseModel):
    case: CaseIn
    tol: float = 1e-8
    max_iter: int = 20


class LocalizeRequest(BaseModel):
    case: CaseIn
    alpha: float = 0.1
    h_step: float = 1e-5


class SweepRequest(BaseModel):
    case: CaseIn
    alphas: list[float] = Field(default_factory=lambda: list(DEFAULT_SWEEP_ALPHAS))
    h_step: float = 1e-5


class ConvertRequest(BaseModel):
    text: str


class BusVoltage(BaseModel):
    id: int
    u: float
    v: float
    vm: float
    angle: float


class SolveReport(BaseModel):
    converged: bool
    iterations: int
    residual_inf: float
    residual_history: list[float]
    buses: list[BusVoltage]
    failure: str | None = None


class MlcRow(BaseModel):
    id: int
    mlc_p: float
    mlc_q: float


class RankEntry(BaseModel):
    id: int
    score: float


class DiagnosisBusRow(BaseModel):
    id: int
    delta_p: float
    delta_q: float
    mlc_p: float
    mlc_q: float
    s_bar_p: float
    s_bar_q: float


class DiagnosisReport(BaseModel):
    alpha: float
    classification: Literal["convex_green", "indefinite_red", "unknown"]
    min_eig_loss_hessian: float | None
    min_eig_local_optimality: float | None
    hessian_asymmetry: float | None
    hessian_error: str | None
    v_min: float
    objective: float
    grad_norm: float
    iterations: int
    jac_condition: float
    residual_inf: float
    loss: float
    buses: list[DiagnosisBusRow]
    ranking: list[RankEntry]


class LocalizeReport(BaseModel):
    status: Literal["feasible", "diagnosed"]
    solution: SolveReport | None = None
    loss: float | None = None
    mlc: list[MlcRow] | None = None
    diagnosis: DiagnosisReport | None = None


class SweepEntryReport(BaseModel):
    alpha: float
    status: Literal["ok", "failed"]
    error: str | None = None
    diagnosis: DiagnosisReport | None = None


class SweepReport(BaseModel):
    feasible: bool
    stability: float
    entries: list[SweepEntryReport]


class HealthReport(BaseModel):
    status: Literal["ok"]
    version: str


def _none_if_nan(value: float) -> float | None:
    return None if math.isnan(value) else value
