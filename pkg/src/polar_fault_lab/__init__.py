"""
polar-fault-lab - polar codes on the binary erasure channel under a faulty SC decoder
"""

__version__ = "0.1.0"

from .core.fault_lab import FaultLab, LabMetrics
from .core.errors import ConfigError, FaultLabError, ResourceLimitError

__all__ = [
    "FaultLab",
    "LabMetrics",
    "FaultLabError",
    "ConfigError",
    "ResourceLimitError",
]

# Convenience function
def create_lab(**kwargs):
    """
    Create a FaultLab instance with optional configuration

    Example:
        lab = create_lab(settings={'delta': 1e-4})
    """
    return FaultLab(**kwargs)
