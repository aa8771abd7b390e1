"""Exception taxonomy shared across the package.

All validation failures are ValueError subclasses so callers can catch
broadly; the CLI maps them to exit code 1 and I/O failures to exit code 2.
"""


class DomainError(ValueError):
    """An input value is outside the mathematical domain of an operation."""


class DimensionError(ValueError):
    """Array shapes or lengths do not agree."""


class ConfigError(ValueError):
    """A configuration parameter violates its contract."""


class FileFormatError(OSError):
    """A file exists but its contents do not match the expected format."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""
