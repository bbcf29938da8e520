"""Exception types raised across the package."""


class QNSpectrumError(Exception):
    """Base class for all errors raised by qnspectrum."""


class DimensionError(QNSpectrumError, ValueError):
    pass


class EmptyHistoryError(QNSpectrumError):
    pass


class CurvatureError(QNSpectrumError):
    """A stored pair violates s^T y > 0 where the update family requires it."""

    def __init__(self, index, value=None):
        self.index = index
        self.value = value
        msg = f"curvature condition s^T y > 0 fails for pair {index}"
        if value is not None:
            msg += f" (s^T y = {value:.3e})"
        super().__init__(msg)


class SingularMError(QNSpectrumError):
    """The small middle matrix of a compact form is (numerically) singular."""

    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class PositivityError(QNSpectrumError):
    pass


class RankError(QNSpectrumError):
    pass


class NumericalError(QNSpectrumError):
    pass


class ConvergenceError(QNSpectrumError):
    pass


class SingularMatrixError(QNSpectrumError):
    pass


class SkippedUpdateWarning(UserWarning):
    """Emitted when an SR1 update is skipped by the denominator safeguard."""
