"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid protocol parameters (lambda, delta, thresholds, profiles)."""


class DimensionError(ValueError):
    """Vector or matrix shapes do not line up."""


class RangeError(ValueError):
    """A value lies outside the field or group it must belong to."""


class SingularMatrixError(ArithmeticError):
    """The matrix has no inverse over the field."""


class GenerationError(RuntimeError):
    """Rejection sampling ran out of attempts."""


class ReconstructionError(ValueError):
    """Secret shares are insufficient or inconsistent."""


class UnrecoverableRoundError(RuntimeError):
    """Too few survivors remain to finish the aggregation round."""


class ConfigurationError(ValueError):
    """A round configuration combines options that cannot work together."""


class VerificationError(RuntimeError):
    """Base for aborts raised by an integrity check."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class CommitmentMismatch(VerificationError):
    """Aggregate commitments do not open to the thawed sum."""


class ResultForgery(VerificationError):
    """Masked frozen-vector sums are inconsistent; the server deviated."""
