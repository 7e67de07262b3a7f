"""Exception types raised by orgbottleneck."""


class ValidationError(ValueError):
    """An input value violates a type invariant (negative mass, bad normalization, ...)."""


class DimensionError(ValidationError):
    """Alphabet sizes of two objects do not line up."""


class ConfigError(ValueError):
    """A solver or scenario configuration value is out of range."""


class CapacityError(ValueError):
    """An exact enumeration would exceed the configured instance-size guard."""


class ConsistencyError(ValueError):
    """Objects from different propagation runs were combined."""
