"""Exception hierarchy shared by the library and the CLI."""


class BackboneError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(BackboneError):
    """Malformed input text. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateGraphError(BackboneError):
    """The graph is too small or empty for the requested computation."""


class InvariantError(BackboneError):
    """An internal consistency check failed."""
