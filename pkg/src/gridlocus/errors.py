"""Exception types shared across the package."""
from __future__ import annotations


class GridLocusError(Exception):
    """Base class for all errors raised by this package."""


class CaseError(GridLocusError):
    """Invalid or unusable input case data."""


class MalformedDocument(CaseError):
    pass


class DuplicateBusId(CaseError):
    pass


class NoSwingBus(CaseError):
    pass


class MultipleSwingBuses(CaseError):
    pass


class DisconnectedGraph(CaseError):
    pass


class InvalidImpedance(CaseError):
    pass


class UnsupportedFeature(CaseError):
    """Input uses a modeling feature outside the supported subset."""


class DimensionMismatch(GridLocusError):
    pass


class SingularJacobian(GridLocusError):
    """Load-flow Jacobian could not be factorized.

    Signals proximity to the solvability boundary; carries the external id
    of the bus associated with the most degenerate pivot.
    """

    def __init__(self, message: str, bus_id: int | None = None):
        super().__init__(message)
        self.bus_id = bus_id


class NoConvergence(GridLocusError):
    """A required load-flow solve did not converge."""

    def __init__(self, message: str, iterations: int = 0,
                 residual_history: tuple[float, ...] = ()):
        super().__init__(message)
        self.iterations = iterations
        self.residual_history = residual_history


class NotConverged(GridLocusError):
    """A minimization result that did not reach stationarity was required to."""


class NonDescentDirection(GridLocusError):
    """Internal consistency check failed: computed step is not a descent
    direction. Indicates an implementation bug, never expected in use."""


class HessianUnavailable(GridLocusError):
    """Injection-space Hessian estimation failed (a perturbed re-solve
    diverged or hit a singular Jacobian)."""


class StrongConvexityLost(UserWarning):
    """The loss function is not strongly convex on this grid: some bus is
    not tied to the swing bus through resistive branches."""
