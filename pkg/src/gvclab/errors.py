"""Exception hierarchy shared across the pipeline."""


class GvcError(Exception):
    """Base class for all gvclab errors."""


class ParseError(GvcError):
    """Malformed input container or header."""


class TruncationError(ParseError):
    """Input ended mid-payload.  Carries the byte offset where data ran out."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class UnsupportedFormat(GvcError):
    """Recognized container but a format variant we do not handle."""


class InvalidArgument(GvcError, ValueError):
    """Caller violated a documented precondition."""


class EncodeError(GvcError):
    """Encoding cannot proceed: input/operating-point mismatch, or a symbol
    outside the entropy model's alphabet."""


class DecodeError(GvcError):
    """Bitstream or payload failed integrity checks during decoding."""


class ShapeError(GvcError, ValueError):
    """Array geometry does not match what the operation requires."""


class SerializeError(GvcError):
    """A header field cannot be represented in the container format."""


class ProfileError(GvcError):
    """Hardware profile is missing data for the requested resolution."""


class InfeasibleError(GvcError):
    """No operating point satisfies the budget.  Carries the binding constraint."""

    def __init__(self, message: str, binding_constraint: str = ""):
        super().__init__(message)
        self.binding_constraint = binding_constraint


class ConfigError(GvcError):
    """Configuration file or named resource is invalid or unknown."""
