"""Exception types raised across the package.

Everything a caller can fix by changing inputs derives from
:class:`ValidationError` (a ``ValueError``); failures of the numerical solve
raise :class:`NumericError`. The CLI maps the two families to exit codes 2
and 3.
"""


class OpStageError(Exception):
    """Base class for all package errors."""


class ValidationError(OpStageError, ValueError):
    """Input violates a documented precondition."""


class NumericError(OpStageError, ArithmeticError):
    """Non-finite data or a linear solve that failed its residual check."""


class InvalidPixel(ValidationError):
    pass


class EmptyImage(ValidationError):
    pass


class EmptyGlcm(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class EmptyClass(ValidationError):
    pass


class DegenerateLabels(ValidationError):
    pass


class EmptyVote(ValidationError):
    pass


class DegenerateSpec(ValidationError):
    pass


class SplitError(ValidationError):
    pass


class MissingClass(ValidationError):
    pass


class PgmError(ValidationError):
    """Malformed or unsupported PGM stream."""
