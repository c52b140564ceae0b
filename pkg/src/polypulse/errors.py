"""Exception types raised by polypulse."""


class PolypulseError(Exception):
    """Base class for all package errors."""


class InvalidArgument(PolypulseError, ValueError):
    """An argument is outside the domain of the operation."""


class NumericalValidityError(PolypulseError):
    """A computed result failed a numerical validity check."""


class InconsistencyError(NumericalValidityError):
    """The error-map projection left a residual outside the five-operator span."""


class CutoffTooSmallError(NumericalValidityError):
    """Population leaked to the top of the truncated Fock space."""

    def __init__(self, message, retry_cutoff):
        super().__init__(message)
        self.retry_cutoff = retry_cutoff


class IntegrationFailure(NumericalValidityError):
    """The propagated state became non-finite or lost validity."""


class RatioUndefined(NumericalValidityError):
    """An improvement ratio has a vanishing denominator."""
