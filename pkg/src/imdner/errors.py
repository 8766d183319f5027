"""Exception hierarchy shared across the package."""


class ImdnerError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ImdnerError):
    """Malformed corpus or embedding input; carries a line number where known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ImdnerError):
    """A label outside the configured label set."""


class TaggingError(ImdnerError):
    """A BIO tag sequence that violates the scheme (e.g. I- after O)."""


class ValidationError(ImdnerError):
    """Structurally invalid data (overlapping spans, bad bounds, ...)."""


class AlignmentError(ImdnerError):
    """Two corpora that should share tokenization diverge."""


class FormatError(ImdnerError):
    """Malformed embedding file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(ImdnerError):
    """NaN/Inf encountered; names the computation stage."""


class ConfigError(ImdnerError):
    """Invalid configuration value or rule."""


class CheckpointError(ImdnerError):
    """Base class for checkpoint I/O failures."""


class UnsupportedVersionError(CheckpointError):
    """Checkpoint format version not understood by this build."""

    def __init__(self, found, supported):
        super().__init__(
            f"checkpoint format version {found} is not supported "
            f"(this build reads version {supported})"
        )
        self.found = found
        self.supported = supported


class IntegrityError(CheckpointError):
    """Checkpoint payload truncated or shape-inconsistent."""
