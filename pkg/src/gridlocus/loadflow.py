"""Power mismatch, Jacobian, and a damped Newton solver in rectangular
voltage coordinates.

State is the real/imaginary voltage parts of the non-swing buses; the swing
voltage is a fixed parameter taken from the case. Mismatch rows are ordered
(dP_1..dP_n, dQ_1..dQ_n) and state columns (u_1..u_n, v_1..v_n), with
computed-minus-specified sign and net generation positive.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, SingularJacobian
from .network import AdmittanceMatrix, GridCase, build_admittance

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 20
_MAX_BACKSTEPS = 8


@dataclass(frozen=True)
class StateVector:
    u: np.ndarray
    v: np.ndarray

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])

    @staticmethod
    def from_array(arr: np.ndarray) -> "StateVector":
        n = arr.size // 2
        return StateVector(arr[:n].copy(), arr[n:].copy())


@dataclass(frozen=True)
class InjectionVector:
    p: np.ndarray
    q: np.ndarray

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.p, self.q])

    @staticmethod
    def from_array(arr: np.ndarray) -> "InjectionVector":
        n = arr.size // 2
        return InjectionVector(arr[:n].copy(), arr[n:].copy())


@dataclass(frozen=True)
class Mismatch:
    f: np.ndarray
    s_calc: InjectionVector


@dataclass(frozen=True)
class JacobianMatrix:
    j: np.ndarray


@dataclass(frozen=True)
class NewtonResult:
    """Outcome of newton_solve; `state` is the last iterate either way."""

    state: StateVector
    converged: bool
    iterations: int
    residual_inf: float
    residual_history: tuple[float, ...]


def case_injections(case: GridCase) -> InjectionVector:
    """Specified net injections of the non-swing buses, in internal order."""
    p = np.array([b.p_inject for b in case.buses[1:]], dtype=float)
    q = np.array([b.q_inject for b in case.buses[1:]], dtype=float)
    return InjectionVector(p, q)


def flat_start(case: GridCase) -> StateVector:
    mag = abs(case.v_swing)
    return StateVector(np.full(case.n, mag), np.zeros(case.n))


def complex_voltages(case: GridCase, x: StateVector) -> np.ndarray:
    """Full complex voltage vector, swing bus first."""
    _check_dims(case, x)
    return np.concatenate([[case.v_swing], x.u + 1j * x.v])


def _check_dims(case: GridCase, x: StateVector, s: InjectionVector | None = None):
    n = case.n
    if x.u.shape != (n,) or x.v.shape != (n,):
        raise DimensionMismatch(
            f"state has shape ({x.u.shape}, {x.v.shape}), case needs n = {n}"
        )
    if s is not None and (s.p.shape != (n,) or s.q.shape != (n,)):
        raise DimensionMismatch(
            f"injections have shape ({s.p.shape}, {s.q.shape}), case needs n = {n}"
        )


def _admittance(case: GridCase, y: AdmittanceMatrix | None) -> np.ndarray:
    return build_admittance(case).y if y is None else y.y


def computed_injections(
    case: GridCase, x: StateVector, y: AdmittanceMatrix | None = None
) -> InjectionVector:
    u_full = complex_voltages(case, x)
    s_cplx = u_full * np.conj(_admittance(case, y) @ u_full)
    return InjectionVector(s_cplx.real[1:].copy(), s_cplx.imag[1:].copy())


def swing_injection(
    case: GridCase, x: StateVector, y: AdmittanceMatrix | None = None
) -> complex:
    """Complex net injection absorbed by the swing bus at state x."""
    u_full = complex_voltages(case, x)
    return complex(u_full[0] * np.conj(_admittance(case, y) @ u_full)[0])


def mismatch(
    case: GridCase,
    x: StateVector,
    s: InjectionVector,
    y: AdmittanceMatrix | None = None,
) -> Mismatch:
    """Computed-minus-specified power mismatch at state x."""
    _check_dims(case, x, s)
    s_calc = computed_injections(case, x, y)
    f = np.concatenate([s_calc.p - s.p, s_calc.q - s.q])
    return Mismatch(f, s_calc)


def jacobian(
    case: GridCase, x: StateVector, y: AdmittanceMatrix | None = None
) -> JacobianMatrix:
    """Analytic partial derivatives of the mismatch w.r.t. (u, v).

    With I = Y U and S_r = U_r conj(I_r):
      dS_r/du_k = d_rk conj(I_r) + U_r conj(Y_rk)
      dS_r/dv_k = j (d_rk conj(I_r) - U_r conj(Y_rk))
    restricted to non-swing rows/columns.
    """
    _check_dims(case, x)
    y_mat = _admittance(case, y)
    u_full = complex_voltages(case, x)
    i_conj = np.conj(y_mat @ u_full)[1:]
    a = u_full[1:, None] * np.conj(y_mat[1:, 1:])
    m1 = np.diag(i_conj) + a
    m2 = 1j * (np.diag(i_conj) - a)
    j = np.block([[m1.real, m2.real], [m1.imag, m2.imag]])
    return JacobianMatrix(j)


def lu_factor_checked(
    j: np.ndarray, case: GridCase, rel_tol: float = 1e-12
) -> tuple[np.ndarray, np.ndarray]:
    """LU-factorize a Jacobian, raising SingularJacobian on degeneracy.

    The reported bus is the one owning the state coordinate of the most
    degenerate pivot (diagnostic, not exact).
    """
    if not np.all(np.isfinite(j)):
        raise SingularJacobian("Jacobian contains non-finite entries")
    with warnings.catch_warnings():
        # the pivot check below turns scipy's singular-matrix warning into
        # a typed error
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(j, check_finite=False)
    diag = np.abs(np.diag(lu))
    scale = diag.max() if diag.size else 0.0
    if scale == 0.0 or diag.min() <= rel_tol * scale:
        k = int(np.argmin(diag))
        bus = case.external_ids[(k % case.n) + 1]
        raise SingularJacobian(
            f"Jacobian is singular to working precision "
            f"(most degenerate pivot near bus {bus})",
            bus_id=bus,
        )
    return lu, piv


def jacobian_state_derivatives(
    case: GridCase, y: AdmittanceMatrix | None = None
) -> list[np.ndarray]:
    """Constant matrices dJ/dx_k for every state coordinate.

    The mismatch is quadratic in (u, v), so the Jacobian is affine in the
    state and unit-step differences recover its derivatives exactly.
    """
    y_mat = AdmittanceMatrix(_admittance(case, y))
    x0 = flat_start(case)
    j0 = jacobian(case, x0, y_mat).j
    out: list[np.ndarray] = []
    for k in range(2 * case.n):
        xa = x0.to_array()
        xa[k] += 1.0
        out.append(jacobian(case, StateVector.from_array(xa), y_mat).j - j0)
    return out


def newton_solve(
    case: GridCase,
    s: InjectionVector,
    x0: StateVector | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> NewtonResult:
    """Newton iteration on the mismatch with a halving backstep safeguard.

    Returns a NewtonResult whose `converged` flag reports whether the
    infinity norm of the mismatch dropped below `tol` within `max_iter`
    steps; raises SingularJacobian if a Jacobian factorization fails.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    y = build_admittance(case)
    x = flat_start(case) if x0 is None else x0
    _check_dims(case, x, s)

    xa = x.to_array()
    history: list[float] = []
    for it in range(max_iter + 1):
        f = mismatch(case, StateVector.from_array(xa), s, y).f
        norm = float(np.max(np.abs(f))) if f.size else 0.0
        history.append(norm)
        if not np.isfinite(norm):
            return NewtonResult(
                StateVector.from_array(xa), False, it, norm, tuple(history)
            )
        if norm < tol:
            return NewtonResult(
                StateVector.from_array(xa), True, it, norm, tuple(history)
            )
        if it == max_iter:
            break
        j = jacobian(case, StateVector.from_array(xa), y).j
        lu, piv = lu_factor_checked(j, case)
        dx = scipy.linalg.lu_solve((lu, piv), -f, check_finite=False)
        step = 1.0
        for _ in range(_MAX_BACKSTEPS):
            trial = mismatch(case, StateVector.from_array(xa + step * dx), s, y).f
            trial_norm = float(np.max(np.abs(trial)))
            if np.isfinite(trial_norm) and trial_norm < norm:
                break
            step *= 0.5
        xa = xa + step * dx

    return NewtonResult(
        StateVector.from_array(xa), False, max_iter, history[-1], tuple(history)
    )
