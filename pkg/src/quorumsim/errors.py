"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical routine could not meet its accuracy contract."""


class ConvergenceError(NumericalError):
    """A series hit its term cap before reaching tolerance.

    ``estimate`` holds the partial result, ``terms`` the number of terms
    consumed before giving up.
    """

    def __init__(self, message, estimate=None, terms=None):
        super().__init__(message)
        self.estimate = estimate
        self.terms = terms


class QuadratureError(NumericalError):
    """Adaptive quadrature exhausted its subdivision depth.

    ``estimate`` holds the value achieved before the error was raised.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ResolutionError(ValueError):
    """Grid step too coarse for the distribution it discretizes."""


class ConditioningError(ValueError):
    """The conditioning event has zero probability."""


class InfiniteMeanError(ValueError):
    """The requested mean diverges (the per-cycle hack probability is zero)."""


class RunawayError(RuntimeError):
    """Cycle cap exceeded; the configuration's hack probability is near zero."""


class UnsupportedFamilyError(ValueError):
    """Hacker laws must stay closed under m-fold sums (exponential or gamma)."""


class ConfigError(ValueError):
    """Bad run configuration; carries the 1-based source line when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UsageError(ValueError):
    """Bad command-line invocation."""
