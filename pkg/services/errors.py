from typing import Optional


class QuantumWalkError(Exception):
    """Base class for all errors raised by the walk services."""


class ValidationError(QuantumWalkError, ValueError):
    """A precondition or type invariant was violated."""


class VertexIndexError(ValidationError, IndexError):
    """A vertex or momentum index lies outside [0, N-1]."""


class UnsupportedConfigurationError(ValidationError):
    """The requested computation is not defined for this configuration."""


class SequenceParseError(ValidationError):
    """A stored sample sequence could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
