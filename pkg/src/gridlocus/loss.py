"""Active-power series losses and their sensitivities.

The loss is the sum over series branches of |U_from - U_to|^2 * r/(r^2+x^2),
a quadratic form in the rectangular voltage coordinates. Charging
susceptance never enters the loss. Injection-space sensitivities come from
the implicit dependence of the solved state on the specified injections:
the gradient via a transposed-Jacobian solve, the Hessian via central
differences of that gradient with warm-started re-solves.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    NoConvergence,
    SingularJacobian,
    StrongConvexityLost,
)
from .loadflow import (
    InjectionVector,
    StateVector,
    complex_voltages,
    jacobian,
    lu_factor_checked,
    newton_solve,
)
from .network import AdmittanceMatrix, GridCase

# Perturbed re-solves feed finite differences, so they are run much tighter
# than the user-facing solver default. The floor is limited by the Jacobian
# conditioning at stressed states.
_RESOLVE_TOL = 1e-10
_RESOLVE_MAX_ITER = 60


@dataclass(frozen=True)
class LossSensitivities:
    """Loss value with state- and injection-space first derivatives."""

    value: float
    grad_state: np.ndarray
    grad_injections: np.ndarray
    mlc: np.ndarray
    jac_condition: float


@dataclass(frozen=True, eq=False)
class LossStateHessian:
    """Constant Hessian of the loss in state coordinates (non-swing block)."""

    h: np.ndarray
    min_eig: float
    strongly_convex: bool


@dataclass(frozen=True, eq=False)
class LossInjectionHessian:
    """Symmetrized finite-difference estimate of the injection-space Hessian."""

    h: np.ndarray
    min_eig: float
    asymmetry: float
    h_step: float


def branch_weights(case: GridCase) -> np.ndarray:
    r = np.array([br.r for br in case.branches])
    x = np.array([br.x for br in case.branches])
    return r / (r * r + x * x)


def loss_value(case: GridCase, x: StateVector) -> float:
    u_full = complex_voltages(case, x)
    w = branch_weights(case)
    f = np.array([br.from_bus for br in case.branches])
    t = np.array([br.to_bus for br in case.branches])
    return float(np.sum(w * np.abs(u_full[f] - u_full[t]) ** 2))


def _weighted_laplacian(case: GridCase) -> np.ndarray:
    m = len(case.buses)
    lap = np.zeros((m, m))
    for br, w in zip(case.branches, branch_weights(case)):
        lap[br.from_bus, br.to_bus] -= w
        lap[br.to_bus, br.from_bus] -= w
    # diagonal as exact negative row sums: gradients vanish identically on
    # uniform voltage profiles
    np.fill_diagonal(lap, -lap.sum(axis=1))
    return lap


def loss_grad_state(case: GridCase, x: StateVector) -> np.ndarray:
    """Gradient of loss_value w.r.t. (u, v) of the non-swing buses.

    Accumulated edge-wise over voltage differences, so it vanishes exactly
    on uniform profiles (flat start included).
    """
    if x.u.shape != (case.n,) or x.v.shape != (case.n,):
        raise DimensionMismatch(f"state does not match case n = {case.n}")
    u_full = complex_voltages(case, x)
    grad = np.zeros(len(case.buses), dtype=complex)
    for br, w in zip(case.branches, branch_weights(case)):
        du = u_full[br.from_bus] - u_full[br.to_bus]
        grad[br.from_bus] += 2.0 * w * du
        grad[br.to_bus] -= 2.0 * w * du
    return np.concatenate([grad.real[1:], grad.imag[1:]])


def _resistively_grounded(case: GridCase) -> bool:
    """True when every bus reaches the swing bus through r > 0 branches."""
    adj: list[list[int]] = [[] for _ in case.buses]
    for br in case.branches:
        if br.r > 0.0:
            adj[br.from_bus].append(br.to_bus)
            adj[br.to_bus].append(br.from_bus)
    seen = {0}
    stack = [0]
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(case.buses)


def loss_hess_state(case: GridCase) -> LossStateHessian:
    """Constant loss Hessian: twice the grounded weighted Laplacian, one
    block per coordinate family, zero cross-blocks."""
    lap_red = _weighted_laplacian(case)[1:, 1:]
    n = case.n
    h = np.zeros((2 * n, 2 * n))
    h[:n, :n] = 2.0 * lap_red
    h[n:, n:] = 2.0 * lap_red
    min_eig = float(scipy.linalg.eigvalsh(2.0 * lap_red)[0]) if n else 0.0
    grounded = _resistively_grounded(case)
    if any(br.r == 0.0 for br in case.branches):
        detail = (
            "the reduced Hessian is singular"
            if not grounded
            else "the reduced Hessian happens to remain positive definite"
        )
        warnings.warn(
            f"grid has zero-resistance branches; {detail}", StrongConvexityLost,
            stacklevel=2,
        )
    return LossStateHessian(h, min_eig, grounded)


def loss_grad_injections(
    case: GridCase, x: StateVector, y: AdmittanceMatrix | None = None
) -> LossSensitivities:
    """Injection-space loss gradient at a state, via J(x)^T g = grad_x.

    The negated gradient is the vector of marginal loss coefficients. Blows
    up as the state approaches the solvability boundary, where the Jacobian
    degenerates; that proximity is reported through SingularJacobian and the
    attached condition estimate.
    """
    grad_x = loss_grad_state(case, x)
    j = jacobian(case, x, y).j
    lu, piv = lu_factor_checked(j, case)
    g = scipy.linalg.lu_solve((lu, piv), grad_x, trans=1, check_finite=False)
    cond = float(np.linalg.cond(j, 1))
    return LossSensitivities(
        value=loss_value(case, x),
        grad_state=grad_x,
        grad_injections=g,
        mlc=-g,
        jac_condition=cond,
    )


def marginal_loss_coefficients(
    case: GridCase, x: StateVector, y: AdmittanceMatrix | None = None
) -> np.ndarray:
    return loss_grad_injections(case, x, y).mlc


def _resolved_grad(case: GridCase, s: InjectionVector, x0: StateVector) -> np.ndarray:
    res = newton_solve(case, s, x0, tol=_RESOLVE_TOL, max_iter=_RESOLVE_MAX_ITER)
    if not res.converged:
        raise NoConvergence(
            "perturbed load-flow re-solve did not converge",
            iterations=res.iterations,
            residual_history=res.residual_history,
        )
    return loss_grad_injections(case, res.state).grad_injections


def loss_hess_injections(
    case: GridCase,
    s: InjectionVector,
    x: StateVector,
    h_step: float = 1e-5,
) -> LossInjectionHessian:
    """Central-difference injection-space Hessian around s, warm-started at x.

    Column k differences the analytic injection-space gradient between
    re-solved states at s +/- h_step along the k-th injection coordinate
    (active first, then reactive). The raw estimate is symmetrized; the
    dropped asymmetry is kept as a diagnostic.
    """
    if h_step <= 0:
        raise ValueError("h_step must be positive")
    n = case.n
    sa = s.to_array()
    h_raw = np.empty((2 * n, 2 * n))
    for k in range(2 * n):
        delta = np.zeros(2 * n)
        delta[k] = h_step
        try:
            g_plus = _resolved_grad(case, InjectionVector.from_array(sa + delta), x)
            g_minus = _resolved_grad(case, InjectionVector.from_array(sa - delta), x)
        except (SingularJacobian, NoConvergence) as exc:
            kind = "P" if k < n else "Q"
            bus = case.external_ids[(k % n) + 1]
            raise type(exc)(
                f"Hessian column for {kind} at bus {bus} failed: {exc}"
            ) from exc
        h_raw[:, k] = (g_plus - g_minus) / (2.0 * h_step)
    asym = float(np.max(np.abs(h_raw - h_raw.T))) if n else 0.0
    h_sym = 0.5 * (h_raw + h_raw.T)
    min_eig = float(scipy.linalg.eigvalsh(h_sym)[0]) if n else 0.0
    return LossInjectionHessian(h_sym, min_eig, asym, h_step)
