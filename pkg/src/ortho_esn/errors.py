"""Exception types raised across the package."""


class OrthoEsnError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(OrthoEsnError, ValueError):
    """A configuration or argument violates its documented constraints."""


class NumericError(OrthoEsnError, ArithmeticError):
    """Non-finite data or a failed numerical routine."""


class SingularSystemError(NumericError):
    """The least-squares normal equations are singular."""


class InsufficientDataError(OrthoEsnError, ValueError):
    """Too few usable points to determine a fit."""


class ProtocolError(OrthoEsnError, RuntimeError):
    """A trial could not be carried out as configured."""
