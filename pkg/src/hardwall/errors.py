"""Exception hierarchy shared by all hardwall modules."""


class HardWallError(Exception):
    """Base class for errors raised by this package."""


class DomainError(HardWallError, ValueError):
    """An argument lies outside the domain where a function is defined."""


class PrecisionError(HardWallError, ArithmeticError):
    """A computed quantity lost the accuracy the algorithm guarantees."""


class QuadratureError(PrecisionError):
    """Adaptive quadrature did not reach the requested tolerance."""


class ConfigError(HardWallError, ValueError):
    """A run configuration is malformed or inconsistent."""
