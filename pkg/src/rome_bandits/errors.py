"""Exception types shared across the package."""


class RomeBanditsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(RomeBanditsError, ValueError):
    """A value passed to an operation violates its preconditions."""


class ConfigError(RomeBanditsError, ValueError):
    """A configuration object or file is inconsistent."""


class ParseError(RomeBanditsError, ValueError):
    """A data file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ProtocolError(RomeBanditsError, RuntimeError):
    """The step/reward interaction protocol was violated."""


class InvalidState(RomeBanditsError, RuntimeError):
    """An operation was called on an object that is not ready for it."""
