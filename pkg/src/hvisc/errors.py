"""Exception types shared across the package."""


class HviscError(Exception):
    """Base class for all package errors."""


class StepTooSmall(HviscError):
    """Finite-difference step below the cancellation floor (1e-8)."""


class NonConvergence(HviscError):
    """Geodesic root-finder failed to match the vertical coordinate."""


class OptimizationFailure(HviscError):
    """Trajectory oracle could not meet the endpoint constraint."""


class UnknownName(HviscError):
    """Requested catalog entry does not exist."""


class CharacteristicPoint(HviscError):
    """Horizontal gradient vanishes; curvature operator undefined here."""


class CflViolation(HviscError):
    """Time step violates the monotonicity (CFL) bound."""


class NanDetected(HviscError):
    """Non-finite values appeared in the grid after a step."""


class OutOfDomain(HviscError):
    """A stencil point leaves the grid box plus halo."""


class SearchBudgetExceeded(HviscError):
    """Hopf-Lax search did not certify a minimizer within budget.

    Carries the best upper bound found so far in ``best_value``.
    """

    def __init__(self, message, best_value):
        super().__init__(message)
        self.best_value = best_value


class UnknownExperiment(HviscError):
    """CLI got an experiment name that is not in the catalog."""


class InvalidParameters(HviscError):
    """CLI experiment parameters failed validation."""
