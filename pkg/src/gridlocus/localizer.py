"""Operator-facing diagnosis of load-flow infeasibility.

Turns a stationary point of the regularized objective into corrected
injections, a ranked list of suspect buses, and a convexity classification
of the corrected operating point, optionally swept over a grid of
regularization parameters.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NoConvergence, NotConverged, SingularJacobian
from .loadflow import InjectionVector, complex_voltages
from .loss import LossSensitivities, loss_grad_injections, loss_hess_injections
from .network import GridCase
from .regularizer import RegularizerOptions, StationaryPoint, minimize

DEFAULT_ALPHAS = (1e-3, 1e-2, 1e-1, 1.0, 10.0)
DEFAULT_H_STEP = 1e-5

CONVEX_GREEN = "convex_green"
INDEFINITE_RED = "indefinite_red"
UNKNOWN = "unknown"

# Eigenvalue floor separating "positive definite" from "indefinite" on the
# finite-difference Hessian estimate.
GREEN_MIN_EIG = 1e-8

THREADS_ENV_VAR = "GRIDLOCUS_THREADS"


@dataclass(frozen=True)
class Diagnosis:
    """Everything an operator needs about one regularized solution."""

    alpha: float
    s_bar: InjectionVector
    residual_profile: np.ndarray  # (n, 2): per-bus (dP, dQ), internal order
    mlc_profile: np.ndarray  # (n, 2): per-bus (mlc_p, mlc_q)
    ranking: tuple[int, ...]  # external ids, worst first
    ranking_scores: tuple[float, ...]
    classification: str
    min_eig_loss_hessian: float
    min_eig_local_optimality: float
    hessian_asymmetry: float
    v_min: float
    stationary: StationaryPoint
    sensitivities: LossSensitivities
    hessian_error: str | None = None


@dataclass(frozen=True)
class SweepEntry:
    alpha: float
    diagnosis: Diagnosis | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.diagnosis is not None


@dataclass(frozen=True)
class SweepResult:
    entries: tuple[SweepEntry, ...]
    stability: float


def corrected_injections(
    s: InjectionVector, stationary: StationaryPoint
) -> InjectionVector:
    """Injection profile actually served at the stationary point: s plus the
    residual, which equals the computed injections there."""
    if not stationary.converged:
        raise NotConverged(
            "corrected injections require a converged stationary point"
        )
    n = s.p.size
    f = stationary.residual.f
    return InjectionVector(s.p + f[:n], s.q + f[n:])


def suspect_scores(residual_profile: np.ndarray) -> np.ndarray:
    """Per-bus score: worst absolute nodal error over both components."""
    return np.max(np.abs(residual_profile), axis=1)


def rank_suspects(
    residual_profile: np.ndarray, external_ids: tuple[int, ...]
) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Order buses by descending score, ties broken by ascending external id.

    `external_ids` holds the non-swing external ids in internal order.
    """
    scores = suspect_scores(residual_profile)
    ext = np.asarray(external_ids)
    order = np.lexsort((ext, -scores))
    return tuple(int(ext[i]) for i in order), tuple(float(scores[i]) for i in order)


def local_optimality_min_eig(h_injections: np.ndarray, alpha: float) -> float:
    """Smallest eigenvalue of identity + alpha * injection Hessian, the
    quantity whose positivity certifies a local minimum."""
    m = h_injections.shape[0]
    return float(scipy.linalg.eigvalsh(np.eye(m) + alpha * h_injections)[0])


def classify(
    case: GridCase,
    stationary: StationaryPoint,
    alpha: float,
    h_step: float = DEFAULT_H_STEP,
) -> Diagnosis:
    """Build the full Diagnosis for one converged stationary point.

    Runs the injection-space Hessian at the corrected profile, warm-started
    at the stationary state. If any perturbed re-solve fails the
    classification degrades to "unknown" and everything else is still
    reported.
    """
    if not stationary.converged:
        raise NotConverged("classification requires a converged stationary point")
    n = case.n
    f = stationary.residual.f
    s = InjectionVector(
        stationary.residual.s_calc.p - f[:n], stationary.residual.s_calc.q - f[n:]
    )
    s_bar = corrected_injections(s, stationary)
    x_star = stationary.x_star

    sens = loss_grad_injections(case, x_star)
    residual_profile = np.column_stack([f[:n], f[n:]])
    mlc_profile = np.column_stack([sens.mlc[:n], sens.mlc[n:]])
    ranking, scores = rank_suspects(residual_profile, case.external_ids[1:])
    v_min = float(np.min(np.abs(complex_voltages(case, x_star))))

    hessian_error: str | None = None
    try:
        hess = loss_hess_injections(case, s_bar, x_star, h_step)
        min_eig_ls = hess.min_eig
        min_eig_prop = local_optimality_min_eig(hess.h, alpha)
        asym = hess.asymmetry
        classification = CONVEX_GREEN if min_eig_ls >= GREEN_MIN_EIG else INDEFINITE_RED
    except (SingularJacobian, NoConvergence) as exc:
        hessian_error = f"{type(exc).__name__}: {exc}"
        min_eig_ls = float("nan")
        min_eig_prop = float("nan")
        asym = float("nan")
        classification = UNKNOWN

    return Diagnosis(
        alpha=alpha,
        s_bar=s_bar,
        residual_profile=residual_profile,
        mlc_profile=mlc_profile,
        ranking=ranking,
        ranking_scores=scores,
        classification=classification,
        min_eig_loss_hessian=min_eig_ls,
        min_eig_local_optimality=min_eig_prop,
        hessian_asymmetry=asym,
        v_min=v_min,
        stationary=stationary,
        sensitivities=sens,
        hessian_error=hessian_error,
    )


def diagnose(
    case: GridCase,
    s: InjectionVector,
    alpha: float,
    h_step: float = DEFAULT_H_STEP,
    grad_tol: float | None = None,
    max_iter: int | None = None,
) -> Diagnosis:
    """Minimize at one alpha from a flat start, then classify."""
    kwargs: dict = {"alpha": alpha}
    if grad_tol is not None:
        kwargs["grad_tol"] = grad_tol
    if max_iter is not None:
        kwargs["max_iter"] = max_iter
    sp = minimize(case, s, RegularizerOptions(**kwargs))
    if not sp.converged:
        raise NotConverged(
            f"minimization at alpha={alpha:g} stalled at grad norm "
            f"{sp.grad_norm:.3e} after {sp.iterations} iterations"
        )
    return classify(case, sp, alpha, h_step)


def sweep_workers(n_entries: int) -> int:
    """Worker count for a sweep: the env override, else one per entry."""
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap < 1:
        cap = n_entries
    return max(1, min(cap, n_entries))


def top_k_stability(rankings: list[tuple[int, ...]], k: int = 2) -> float:
    """Agreement of the top-k suspect sets across sweep entries."""
    if not rankings:
        return 0.0
    common = set(rankings[0][:k])
    for r in rankings[1:]:
        common &= set(r[:k])
    return len(common) / float(k)


def alpha_sweep(
    case: GridCase,
    s: InjectionVector,
    alphas: tuple[float, ...] = DEFAULT_ALPHAS,
    h_step: float = DEFAULT_H_STEP,
    grad_tol: float | None = None,
    max_iter: int | None = None,
    max_workers: int | None = None,
) -> SweepResult:
    """One independent minimize + classify per alpha, ascending.

    Per-entry failures are recorded and the sweep continues. Entries run on
    a thread pool sized by `max_workers` (default: GRIDLOCUS_THREADS or the
    number of entries); results are deterministic regardless of scheduling.
    """
    if len(alphas) == 0:
        raise ValueError("alphas must be non-empty")
    if any(a <= 0 for a in alphas):
        raise ValueError("all alphas must be positive")
    ordered = tuple(sorted(alphas))
    if len(set(ordered)) != len(ordered):
        raise ValueError("alphas must be distinct")

    def run(alpha: float) -> SweepEntry:
        try:
            diag = diagnose(case, s, alpha, h_step, grad_tol, max_iter)
            return SweepEntry(alpha, diag)
        except (NotConverged, SingularJacobian, NoConvergence) as exc:
            return SweepEntry(alpha, None, f"{type(exc).__name__}: {exc}")

    workers = sweep_workers(len(ordered)) if max_workers is None else max_workers
    if workers <= 1 or len(ordered) == 1:
        entries = tuple(run(a) for a in ordered)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = tuple(pool.map(run, ordered))

    rankings = [e.diagnosis.ranking for e in entries if e.diagnosis is not None]
    return SweepResult(entries, top_k_stability(rankings))
