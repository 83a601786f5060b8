"""Exception types raised across the package."""


class PadeCacheError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(PadeCacheError, ValueError):
    pass


class OutOfRange(PadeCacheError, ValueError):
    pass


class CoeffArityMismatch(PadeCacheError, ValueError):
    pass


class InsufficientHistory(PadeCacheError, ValueError):
    pass


class UnsupportedOrder(PadeCacheError, ValueError):
    pass


class DimMismatch(ShapeMismatch):
    pass


class StepOutOfRange(PadeCacheError, IndexError):
    pass


class LengthMismatch(ShapeMismatch):
    pass


class EmptySequence(PadeCacheError, ValueError):
    pass


class ConfigMismatch(PadeCacheError, ValueError):
    pass


class ConfigError(PadeCacheError, ValueError):
    """Invalid or unknown configuration values (CLI exit code 2)."""
