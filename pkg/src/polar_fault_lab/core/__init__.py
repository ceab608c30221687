"""Analysis and simulation of polar codes with decoder faults"""

from .fault_lab import FaultLab, LabMetrics
from .analysis import (
    BlocklengthDecision,
    CodeSpec,
    CovarianceMatrix,
    FerBounds,
    InfoSet,
    ProtectionReport,
    ZTable,
)
from .simulation import BoundsValidation, DecodeResult, FaultPattern, FerEstimate

__all__ = [
    "FaultLab",
    "LabMetrics",
    "ZTable",
    "CodeSpec",
    "InfoSet",
    "ProtectionReport",
    "CovarianceMatrix",
    "FerBounds",
    "BlocklengthDecision",
    "FaultPattern",
    "DecodeResult",
    "FerEstimate",
    "BoundsValidation",
]
