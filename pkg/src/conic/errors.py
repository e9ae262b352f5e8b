"""Exception hierarchy shared across the package."""


class ConicError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(ConicError):
    """Malformed or invalid job configuration."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GridError(ConicError):
    """Grid cannot support the requested operation."""


class HypothesisError(ConicError):
    """A geometric hypothesis of the construction is violated."""


class ConstructionError(ConicError):
    """Barrier constants cannot be chosen for the given data."""


class ConvergenceError(ConicError):
    """Iteration failed to converge or lost its monotonicity certificate."""


class ObstructionError(ConicError):
    """The metric is obstructed from the requested deformation."""
