"""Exception types shared across the package."""


class JcmError(Exception):
    """Base class for all jcmlab errors."""


class DimensionError(JcmError):
    """Tensor shapes do not satisfy an operation's contract."""


class DomainError(JcmError):
    """A value lies outside an operation's admissible domain."""


class NonFiniteError(JcmError):
    """An operation produced NaN or Inf."""


class DeterminismError(JcmError):
    """A computation expected to be deterministic returned differing values."""


class ConfigError(JcmError):
    """A config file contains an unknown key or an invalid value."""


class CheckpointFormatError(JcmError):
    """A checkpoint file is malformed, truncated, or has an unsupported version."""


class DatasetError(JcmError):
    """A dataset manifest or its binary payload fails validation."""
