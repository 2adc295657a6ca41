"""Exception hierarchy shared by every module."""


class LekError(Exception):
    """Base class for all library errors."""


class ParameterError(LekError, ValueError):
    """Out-of-range exponents, bad grid spacing, malformed inputs."""


class InvalidDomainError(ParameterError):
    """Degenerate or non-convex domain description."""


class ResourceError(LekError):
    """A grid would exceed the configured node budget."""


class NumericError(LekError, ArithmeticError):
    """Quadrature, shooting or descent broke down (NaN, no bracket, ...)."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class UndefinedRatioError(ParameterError):
    """A normalized gap was requested where its denominator vanishes."""
