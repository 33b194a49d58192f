"""Exception hierarchy shared by all carbofront modules."""

from __future__ import annotations


class CarbofrontError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(CarbofrontError, ValueError):
    """A parameter violates its documented admissible range."""


class ScenarioValidationError(CarbofrontError):
    """A solver entry point was handed a scenario that fails validation.

    Carries the structured failure list so callers can name the violated
    assumption(s).
    """

    def __init__(self, failures):
        self.failures = list(failures)
        names = ", ".join(f.assumption for f in self.failures)
        super().__init__(f"scenario failed validation: {names}")


class StepFailureError(CarbofrontError):
    """Picard iteration did not converge within the iteration cap."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"fixed-point step stalled: residual {residual:.3e} "
            f"after {iterations} iterations"
        )


class NumericalBlowupError(CarbofrontError):
    """A non-finite value appeared in the solution."""

    def __init__(self, t: float, detail: str = ""):
        self.t = t
        super().__init__(f"non-finite value at t={t:.6g}" + (f": {detail}" if detail else ""))


class CheckpointLookupError(CarbofrontError, LookupError):
    """Requested time is not a recorded checkpoint."""


class InsufficientDataError(CarbofrontError):
    """Too few checkpoints in the requested window for a fit."""
