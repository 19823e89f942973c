"""Exception types shared across the package."""


class ChangebenchError(Exception):
    """Base class for all changebench errors."""


class DatasetError(ChangebenchError):
    """Invalid or malformed metric data (bad CSV, bad labels, bad shapes)."""


class StatsError(ChangebenchError):
    """A statistical routine was called with unusable input."""


class ModelError(ChangebenchError):
    """A classifier was misused (dimension mismatch, unknown kind, ...)."""


class ConfigError(ChangebenchError):
    """Bad pipeline configuration (unknown key, unparsable value)."""
