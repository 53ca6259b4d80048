"""Exception hierarchy.

Everything raised on purpose derives from :class:`TvOirError`.  Numerical
breakdowns derive from :class:`NumericError` so callers (and the CLI exit
code) can tell them apart from bad input.
"""


class TvOirError(Exception):
    """Base class for all package errors."""


class PreconditionError(TvOirError, ValueError):
    """An argument violates a documented precondition."""


class InsufficientLengthError(PreconditionError):
    """The series is too short for the requested model order."""


class IngestError(TvOirError):
    """Epoch data could not be read or failed validation."""


class NumericError(TvOirError, ArithmeticError):
    """Base class for numerical failures."""


class CovarianceNotPDError(NumericError):
    """A covariance matrix is not symmetric positive definite."""


class SingularNormalEquationsError(NumericError):
    """The RLS correlation matrix could not be factorized."""

    def __init__(self, t_index, message=None):
        self.t_index = t_index
        super().__init__(message or f"singular normal equations at time index {t_index}")


class NoStationarySolutionError(NumericError):
    """The frozen-coefficient model is unstable, so no stationary covariance exists."""


class SingularSystemError(NumericError):
    """A block-Toeplitz Yule-Walker system is singular."""


class NumericDegeneracyError(NumericError):
    """A derived innovation covariance lost positive definiteness."""


class SpectralSingularityError(NumericError):
    """``I - sum A_k exp(-j w k)`` is singular at some frequency."""

    def __init__(self, omega, message=None):
        self.omega = omega
        super().__init__(message or f"transfer matrix singular at omega={omega:.6g}")


class SpectralDegeneracyError(NumericError):
    """A spectral density block is not Hermitian positive definite."""
