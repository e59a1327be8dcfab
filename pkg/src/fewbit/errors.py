"""Exception types raised across the package."""


class FewBitError(Exception):
    """Base class for all package errors."""


class DimensionError(FewBitError, ValueError):
    """Shapes or lengths that do not fit together."""


class InvalidSelectionError(FewBitError, ValueError):
    """Bad DFT column selection (duplicate or out of range)."""


class InputError(FewBitError, ValueError):
    """Non-finite or otherwise unusable numeric input."""


class PreconditionError(FewBitError, ValueError):
    """An operation was called outside its documented domain."""


class NumericalError(FewBitError, ArithmeticError):
    """A linear system could not be factorized.

    ``condition`` carries the 2-norm condition number of the offending
    matrix when it could be computed.
    """

    def __init__(self, message, condition=None):
        if condition is not None:
            message = f"{message} (condition number {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class TrainingError(FewBitError, RuntimeError):
    """Divergence or non-finite values during forward/backward passes."""


class CheckpointError(FewBitError, ValueError):
    """Malformed or incompatible checkpoint file."""
