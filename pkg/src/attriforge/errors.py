"""Exception hierarchy shared across the package."""


class AttriforgeError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(AttriforgeError):
    """Model or pipeline wired together with incompatible settings."""


class DomainError(AttriforgeError, ValueError):
    """Input value outside its documented domain (e.g. attribute not in [0,1])."""


class NumericError(AttriforgeError):
    """A computation produced non-finite values."""


class CapabilityError(AttriforgeError):
    """A required runtime capability (e.g. input gradients) is unavailable."""


class CheckpointError(AttriforgeError):
    """Checkpoint file is missing, corrupt, truncated, or of an unknown version."""


class ConfigParseError(AttriforgeError):
    """Config file or override string could not be parsed."""
