"""Exceptions raised by polar-fault-lab"""


class FaultLabError(Exception):
    """Base class for all library errors"""


class ConfigError(FaultLabError, ValueError):
    """Invalid argument, parameter range or configuration document"""


class ResourceLimitError(FaultLabError):
    """A requested computation exceeds a configured resource cap"""


def check_probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_level(name: str, value: int, upper: int = None) -> int:
    if int(value) != value or value < 0:
        raise ConfigError(f"{name} must be a non-negative integer, got {value}")
    if upper is not None and value > upper:
        raise ConfigError(f"{name} must be at most {upper}, got {value}")
    return int(value)
