"""Loss-regularized residual minimization.

Minimizes 0.5*||F(x,S)||^2 + alpha*L(x). Because the mismatch is quadratic
in the rectangular state, the objective Hessian is available exactly and
cheaply: J^T J plus a residual-curvature term assembled from the constant
Jacobian derivatives, plus alpha times the constant loss Hessian. Search
directions solve a positive-definite shift of that Hessian (the shift is
zero whenever the Hessian is already positive definite, which the loss
term guarantees near well-regularized solutions), globalized with Armijo
backtracking so the recorded objective trace never increases.

Close to stationarity the per-step objective decrease falls below floating
point resolution while the gradient is still above tolerance; a short
polish phase then takes shifted-Newton steps accepted purely on gradient
decrease, with the objective change bounded at rounding level.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NonDescentDirection
from .loadflow import (
    InjectionVector,
    Mismatch,
    StateVector,
    flat_start,
    jacobian,
    jacobian_state_derivatives,
    mismatch,
)
from .loss import loss_grad_state, loss_hess_state, loss_value
from .network import GridCase, build_admittance

DEFAULT_GRAD_TOL = 1e-8
DEFAULT_MAX_ITER = 200

_ARMIJO_C1 = 1e-4
_ARMIJO_FACTOR = 0.5
_ARMIJO_MAX_HALVINGS = 30
# line-search steps below this are a symptom of the rounding floor, not of
# genuine curvature; they hand control to the polish phase
_STALL_STEP = _ARMIJO_FACTOR**20
_POLISH_BUDGET = 8
_POLISH_OBJ_SLACK = 16.0 * np.finfo(float).eps


@dataclass(frozen=True)
class RegularizerOptions:
    alpha: float
    grad_tol: float = DEFAULT_GRAD_TOL
    max_iter: int = DEFAULT_MAX_ITER
    start: StateVector | None = None

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ValueError("alpha must be positive")
        if not (self.grad_tol > 0):
            raise ValueError("grad_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class IterationRecord:
    objective: float
    grad_norm: float
    step_length: float


@dataclass(frozen=True)
class StationaryPoint:
    """Result of minimize(); converged implies grad_norm < grad_tol."""

    x_star: StateVector
    alpha: float
    objective: float
    grad_norm: float
    residual: Mismatch
    iterations: int
    converged: bool
    trace: tuple[IterationRecord, ...]
    jac_condition: float

    @property
    def objective_trace(self) -> tuple[float, ...]:
        return tuple(record.objective for record in self.trace)


def iteration_trace_csv(point: StationaryPoint) -> str:
    lines = ["iter,objective,grad_norm,step_length"]
    for i, rec in enumerate(point.trace):
        lines.append(f"{i},{rec.objective!r},{rec.grad_norm!r},{rec.step_length!r}")
    return "\n".join(lines) + "\n"


def objective(case: GridCase, s: InjectionVector, x: StateVector, alpha: float) -> float:
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    f = mismatch(case, x, s).f
    return float(0.5 * f @ f + alpha * loss_value(case, x))


def objective_grad(
    case: GridCase, s: InjectionVector, x: StateVector, alpha: float
) -> np.ndarray:
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    f = mismatch(case, x, s).f
    j = jacobian(case, x).j
    return j.T @ f + alpha * loss_grad_state(case, x)


def residual_curvature(dj: list[np.ndarray], weights: np.ndarray) -> np.ndarray:
    """Sum of mismatch-component Hessians weighted by the current residual,
    symmetrized against accumulation noise."""
    m = len(dj)
    t = np.empty((m, m))
    for k, dk in enumerate(dj):
        t[:, k] = dk.T @ weights
    return 0.5 * (t + t.T)


class _Objective:
    """Bundles evaluations of the regularized objective for one (case, s)."""

    def __init__(self, case: GridCase, s: InjectionVector, alpha: float):
        self.case = case
        self.s = s
        self.alpha = alpha
        self.y = build_admittance(case)
        self.h_loss = loss_hess_state(case).h
        self.dj = jacobian_state_derivatives(case, self.y)

    def value(self, xa: np.ndarray) -> tuple[np.ndarray, float]:
        state = StateVector.from_array(xa)
        f = mismatch(self.case, state, self.s, self.y).f
        obj = float(0.5 * f @ f + self.alpha * loss_value(self.case, state))
        return f, obj

    def gradient(self, xa: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        state = StateVector.from_array(xa)
        j = jacobian(self.case, state, self.y).j
        g = j.T @ f + self.alpha * loss_grad_state(self.case, state)
        return j, g

    def hessian(self, j: np.ndarray, f: np.ndarray) -> np.ndarray:
        return j.T @ j + residual_curvature(self.dj, f) + self.alpha * self.h_loss


def _shifted_cholesky(h: np.ndarray, shift_seed: float):
    """Cholesky of h + shift*I, raising the shift until it succeeds."""
    m = h.shape[0]
    shift = 0.0
    seed = max(shift_seed, 1e-8)
    for _ in range(80):
        try:
            chol = scipy.linalg.cho_factor(
                h + shift * np.eye(m) if shift else h, check_finite=False
            )
            return chol, shift
        except scipy.linalg.LinAlgError:
            shift = seed if shift == 0.0 else 2.0 * shift
    raise NonDescentDirection("could not shift the model Hessian to definiteness")


def minimize(
    case: GridCase, s: InjectionVector, opts: RegularizerOptions
) -> StationaryPoint:
    """Descent iteration on the regularized objective.

    Always returns a StationaryPoint; `converged` is False when the
    gradient tolerance was not reached within the iteration cap. The
    objective trace records the descent phase and is non-increasing.
    """
    alpha = opts.alpha
    prob = _Objective(case, s, alpha)
    x = flat_start(case) if opts.start is None else opts.start

    xa = x.to_array()
    f, obj = prob.value(xa)
    j, g = prob.gradient(xa, f)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    trace = [IterationRecord(obj, gnorm, 0.0)]
    shift_seed = 1e-3 * float(np.max(np.abs(j))) ** 2 if g.size else 1e-8
    iterations = 0

    while gnorm >= opts.grad_tol and iterations < opts.max_iter:
        iterations += 1
        h = prob.hessian(j, f)
        chol, _ = _shifted_cholesky(h, shift_seed)
        direction = scipy.linalg.cho_solve(chol, -g, check_finite=False)
        if not np.all(np.isfinite(direction)):
            direction = -g
        slope = float(g @ direction)
        if slope >= 0.0:
            raise NonDescentDirection(
                f"step has nonnegative directional derivative {slope:.3e}"
            )

        step = 1.0
        accepted = False
        for _ in range(_ARMIJO_MAX_HALVINGS + 1):
            trial = xa + step * direction
            f_t, obj_t = prob.value(trial)
            if np.isfinite(obj_t) and obj_t <= obj + _ARMIJO_C1 * step * slope:
                accepted = True
                break
            step *= _ARMIJO_FACTOR

        if accepted and step > _STALL_STEP:
            xa, f, obj = trial, f_t, obj_t
            j, g = prob.gradient(xa, f)
            gnorm = float(np.max(np.abs(g)))
            trace.append(IterationRecord(obj, gnorm, step))
            continue

        # Progress is below objective resolution: polish on the gradient.
        xa, f, obj, j, g, gnorm, used = _polish(
            prob, xa, f, obj, j, g, gnorm, opts.grad_tol, shift_seed, trace
        )
        iterations += used
        if used == 0:
            break  # no resolvable progress in either phase

    converged = gnorm < opts.grad_tol
    final = mismatch(case, StateVector.from_array(xa), s, prob.y)
    cond = float(np.linalg.cond(j, 1)) if g.size else 1.0
    return StationaryPoint(
        x_star=StateVector.from_array(xa),
        alpha=alpha,
        objective=obj,
        grad_norm=gnorm,
        residual=final,
        iterations=iterations,
        converged=converged,
        trace=tuple(trace),
        jac_condition=cond,
    )


def _polish(prob, xa, f, obj, j, g, gnorm, grad_tol, shift_seed, trace):
    """Shifted-Newton steps accepted on strict gradient decrease only.

    Used once ordinary line searches stop resolving objective decreases;
    each accepted step must keep the objective within rounding slack, so
    the method stays honest about monotonicity while the gradient drops.
    Accepted steps are appended to the trace only when they do not break
    its non-increasing objective sequence.
    """
    used = 0
    for _ in range(_POLISH_BUDGET):
        if gnorm < grad_tol:
            break
        h = prob.hessian(j, f)
        chol, _ = _shifted_cholesky(h, shift_seed)
        delta = scipy.linalg.cho_solve(chol, -g, check_finite=False)
        trial = xa + delta
        f_t, obj_t = prob.value(trial)
        if not np.isfinite(obj_t):
            break
        j_t, g_t = prob.gradient(trial, f_t)
        gnorm_t = float(np.max(np.abs(g_t)))
        if gnorm_t >= gnorm or abs(obj_t - obj) > _POLISH_OBJ_SLACK * (1.0 + abs(obj)):
            break
        xa, f, obj, j, g, gnorm = trial, f_t, obj_t, j_t, g_t, gnorm_t
        used += 1
        if obj <= trace[-1].objective:
            trace.append(IterationRecord(obj, gnorm, 1.0))
    return xa, f, obj, j, g, gnorm, used
