"""Exception types shared across the solver."""


class ParameterError(ValueError):
    """Invalid argument or inconsistent configuration."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class AccuracyError(RuntimeError):
    """A quadrature or series failed to reach the requested tolerance.

    Carries the best available estimate so callers can inspect how far
    off the computation ended up.
    """

    def __init__(self, message, estimate=None, error_estimate=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate


class DivergenceError(RuntimeError):
    """The evolved field stopped being finite; names the offending step."""


class CapacityError(RuntimeError):
    """A requested allocation would exceed the configured memory budget."""
