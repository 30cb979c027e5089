"""Load-flow solvability diagnostics: solve AC load-flow cases and, when a
case is infeasible or diverges, localize the responsible buses by
minimizing a loss-regularized residual objective."""

from .errors import (
    CaseError,
    DimensionMismatch,
    DisconnectedGraph,
    DuplicateBusId,
    GridLocusError,
    HessianUnavailable,
    InvalidImpedance,
    MalformedDocument,
    MultipleSwingBuses,
    NoConvergence,
    NonDescentDirection,
    NoSwingBus,
    NotConverged,
    SingularJacobian,
    StrongConvexityLost,
    UnsupportedFeature,
)
from .loadflow import (
    InjectionVector,
    JacobianMatrix,
    Mismatch,
    NewtonResult,
    StateVector,
    case_injections,
    flat_start,
    jacobian,
    mismatch,
    newton_solve,
)
from .localizer import (
    DEFAULT_ALPHAS,
    Diagnosis,
    SweepResult,
    alpha_sweep,
    classify,
    corrected_injections,
    diagnose,
    rank_suspects,
)
from .loss import (
    LossInjectionHessian,
    LossSensitivities,
    LossStateHessian,
    loss_grad_injections,
    loss_grad_state,
    loss_hess_injections,
    loss_hess_state,
    loss_value,
    marginal_loss_coefficients,
)
from .network import (
    AdmittanceMatrix,
    Branch,
    Bus,
    GridCase,
    build_admittance,
    case_from_dict,
    case_to_dict,
    import_matpower,
    parse_case,
    serialize_case,
)
from .regularizer import (
    IterationRecord,
    RegularizerOptions,
    StationaryPoint,
    iteration_trace_csv,
    minimize,
    objective,
    objective_grad,
)

__version__ = "0.1.0"

__all__ = [
    "AdmittanceMatrix",
    "Branch",
    "Bus",
    "CaseError",
    "DEFAULT_ALPHAS",
    "Diagnosis",
    "DimensionMismatch",
    "DisconnectedGraph",
    "DuplicateBusId",
    "GridCase",
    "GridLocusError",
    "HessianUnavailable",
    "InjectionVector",
    "InvalidImpedance",
    "IterationRecord",
    "JacobianMatrix",
    "LossInjectionHessian",
    "LossSensitivities",
    "LossStateHessian",
    "MalformedDocument",
    "Mismatch",
    "MultipleSwingBuses",
    "NewtonResult",
    "NoConvergence",
    "NonDescentDirection",
    "NoSwingBus",
    "NotConverged",
    "RegularizerOptions",
    "SingularJacobian",
    "StateVector",
    "StationaryPoint",
    "StrongConvexityLost",
    "SweepResult",
    "UnsupportedFeature",
    "alpha_sweep",
    "build_admittance",
    "case_from_dict",
    "case_injections",
    "case_to_dict",
    "classify",
    "corrected_injections",
    "diagnose",
    "flat_start",
    "import_matpower",
    "iteration_trace_csv",
    "jacobian",
    "loss_grad_injections",
    "loss_grad_state",
    "loss_hess_injections",
    "loss_hess_state",
    "loss_value",
    "marginal_loss_coefficients",
    "minimize",
    "mismatch",
    "newton_solve",
    "objective",
    "objective_grad",
    "parse_case",
    "rank_suspects",
    "serialize_case",
]
