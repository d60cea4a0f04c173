"""fblab exception classes."""

from __future__ import annotations


class FbLabError(RuntimeError):
    """Base exception for fblab errors."""


class UserError(FbLabError):
    """Errors that should be shown to user without traceback."""

    def __init__(self, message: str, rc: int = 2):
        super().__init__(message)
        self.rc = rc


class ConfigError(UserError):
    """Experiment configuration could not be parsed or validated (exit 2)."""

    def __init__(self, message: str):
        super().__init__(message, rc=2)


class PreconditionError(UserError):
    """A numerical precondition failed (exit 3)."""

    def __init__(self, message: str):
        super().__init__(message, rc=3)


class ParameterError(PreconditionError):
    """Invalid grid, solver, cutoff or model parameter."""


class SamplingError(PreconditionError):
    """A sampled function returned a non-finite value."""


class GridMismatchError(PreconditionError):
    """Two fields or masks live on different grids."""


class DomainError(PreconditionError):
    """A ball or region leaves the grid cube."""


class ResolutionError(PreconditionError):
    """A radius is too small for the grid spacing."""


class ConstraintViolationError(PreconditionError):
    """A field violates its sign constraint."""


class SlopeBoundError(PreconditionError):
    """A field is too steep for the small-angle expansion."""


class UndefinedDistanceError(PreconditionError):
    """A distance is requested between empty point sets."""


class UndefinedRatioError(PreconditionError):
    """A supremum is requested over an empty node set."""
