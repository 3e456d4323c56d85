"""Exception hierarchy shared by every grwlab module."""


class GrwlabError(Exception):
    """Base class for all library errors."""


class ConfigurationError(GrwlabError, ValueError):
    """Invalid construction parameters or run configuration."""


class DomainError(GrwlabError, ValueError):
    """A time value lies outside the warp's open interval I."""


class NumericError(GrwlabError, ArithmeticError):
    """Non-finite input where a finite value is required."""


class GeometryError(GrwlabError):
    """The graph is not spacelike with the requested margin.

    ``vertex`` is the index of the worst offender and ``ratio`` its value
    of |Du| / f(u).
    """

    def __init__(self, message, vertex=None, ratio=None):
        super().__init__(message)
        self.vertex = vertex
        self.ratio = ratio


class UnsupportedFiberError(GrwlabError):
    """The operation is not available on this fiber backend."""


class UnsupportedRegimeError(GrwlabError):
    """The input lies outside the regime where an approximation is valid."""
