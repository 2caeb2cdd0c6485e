"""Exception hierarchy shared by every module."""


class DiskEmbedError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(DiskEmbedError, ValueError):
    pass


class DomainError(DiskEmbedError, ValueError):
    """Input lies outside the domain where a formula is defined."""


class DegenerateGradientError(DiskEmbedError, ArithmeticError):
    """Distance gradient is undefined (coincident or antipodal points)."""


class NumericDegeneracyError(DiskEmbedError, ArithmeticError):
    pass


class ParseError(DiskEmbedError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(DiskEmbedError, ValueError):
    pass


class CycleError(ValidationError):
    def __init__(self, edge):
        super().__init__(f"cycle detected through back edge {edge[0]!r} -> {edge[1]!r}")
        self.edge = edge


class ConfigError(DiskEmbedError, ValueError):
    pass


class FormatError(DiskEmbedError, ValueError):
    """Checkpoint or manifest file does not match the expected format."""
