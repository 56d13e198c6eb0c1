"""Exception types shared across the package."""


class AeroQaError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AeroQaError):
    """An input violates a documented invariant or precondition."""


class ParseError(AeroQaError):
    """Malformed textual input (report, KG file, query, taxonomy...)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(AeroQaError):
    """Bad configuration, e.g. an extraction template naming an unknown group."""


class RemoteError(AeroQaError):
    """A remote embedding/reader endpoint failed or returned garbage."""
