"""Exception and warning hierarchy shared by every module."""


class RelqmeError(Exception):
    """Base class for all package errors."""


class ValidationError(RelqmeError, ValueError):
    """A physical or structural parameter failed validation."""


class InvalidTruncationError(ValidationError):
    pass


class InvalidRateError(ValidationError):
    pass


class InvalidGaugeError(ValidationError):
    pass


class ShapeMismatchError(ValidationError):
    pass


class SizeError(ValidationError):
    """Operator product longer than the configured maximum."""


class ClassificationError(ValidationError):
    """A separation does not have the lightcone class an operation requires."""


class CFLViolationError(ValidationError):
    """Leapfrog step too large; ``suggested_dt`` holds a stable replacement."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class NumericalError(RelqmeError, RuntimeError):
    """A numerical procedure failed to reach its tolerance."""


class StepSizeUnderflowError(NumericalError):
    pass


class TruncationLeakageError(NumericalError):
    """Population reached the top Fock level during an evolution."""


class QuadratureError(NumericalError):
    """Oscillatory quadrature did not converge.

    ``partial_value`` and ``error_estimate`` carry the best available result.
    """

    def __init__(self, message, partial_value=None, error_estimate=None):
        super().__init__(message)
        self.partial_value = partial_value
        self.error_estimate = error_estimate


class FitError(NumericalError):
    pass


class RankDeficiencyWarning(UserWarning):
    pass


class SupportLeakageWarning(UserWarning):
    pass


class InterpolationWarning(UserWarning):
    pass
