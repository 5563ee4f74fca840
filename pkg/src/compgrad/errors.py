"""Exception types shared across the package."""


class CompgradError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(CompgradError):
    """Operands have incompatible shapes (x/y splits, boxes, vectors)."""


class EvaluationError(CompgradError):
    """An oracle returned a non-finite value.  Carries the probe point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class SolveError(CompgradError):
    """An inner linear solve failed to reach tolerance.  Carries the residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SolverRunError(CompgradError):
    """A solver loop aborted.  Carries the partial trajectory, if any."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class UnsupportedProblemError(CompgradError):
    """The requested operation needs structure the problem does not have."""


class ConfigError(CompgradError):
    """An experiment configuration is malformed.  Message names the field."""
