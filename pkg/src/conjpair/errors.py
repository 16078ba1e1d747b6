"""Exception types raised across the package."""


class ConjPairError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(ConjPairError, ValueError):
    pass


class DimensionError(ConjPairError, ValueError):
    pass


class InvalidSpecError(ConjPairError, ValueError):
    pass


class BoundViolationError(ConjPairError, ValueError):
    pass


class CompatibilityError(ConjPairError, ValueError):
    """Right-hand side is not orthogonal to the constants."""


class NonConvergenceError(ConjPairError, RuntimeError):
    """An iterative solve stopped before reaching its tolerance.

    ``residual`` holds the last relative residual seen.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class DegenerateFieldError(ConjPairError, ValueError):
    pass


class DomainError(ConjPairError, ValueError):
    pass


class SizeError(ConjPairError, ValueError):
    pass


class IncompatibilityError(ConjPairError, ValueError):
    pass
