"""Exception types shared across the package."""


class StructcsError(Exception):
    """Base class for all structcs errors."""


class InvalidConfigError(StructcsError, ValueError):
    """A scheme or experiment configuration violates a structural constraint."""


class TooFewMeasurementsError(InvalidConfigError):
    """Fewer measurements than sub-signals: some sub-signal would get none."""


class DimensionMismatchError(StructcsError, ValueError):
    """Operand shape does not match the operator's input or output size."""


class DensifyRefusedError(StructcsError):
    """Dense materialization refused: the signal dimension is too large."""


class EnumerationTooLargeError(StructcsError):
    """Exact RIP enumeration refused: too many column supports."""


class InvalidSignalError(StructcsError, ValueError):
    """A signal fails a precondition (zero vector, too short, ...)."""


class UndefinedCorrelationError(StructcsError, ValueError):
    """Pearson correlation undefined because one side is constant."""


class NumericallySingularError(StructcsError, RuntimeError):
    """Least-squares refit hit a rank-deficient system.

    The partial solver state is attached as ``partial`` so callers can
    inspect how far the solve got.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DivergenceError(StructcsError, RuntimeError):
    """Iterative solver residual grew far beyond its starting value."""
