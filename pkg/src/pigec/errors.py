"""Exception hierarchy shared across the package."""


class PigecError(Exception):
    """Base class for all package errors."""


class FormatError(PigecError, ValueError):
    pass


class OverlapError(PigecError, ValueError):
    pass


class RangeError(PigecError, IndexError):
    pass


class ParseError(PigecError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownAnnotator(PigecError, KeyError):
    pass


class SchemaError(ParseError):
    pass


class EditMismatchError(ParseError):
    pass


class NotEnoughExamples(PigecError, ValueError):
    pass


class TransportError(PigecError):
    """Retryable failure talking to a backend."""


class BackendRefusal(PigecError):
    """Non-retryable rejection from a backend."""


class NoScriptMatch(PigecError, LookupError):
    pass


class EmptyCorrection(PigecError):
    pass


class LengthMismatch(PigecError, ValueError):
    pass


class ParseWarning(UserWarning):
    """Malformed line in a single-call model reply; collected, never raised."""
