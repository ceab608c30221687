from .codec import (
    DecodeResult,
    FaultPattern,
    bit_reversal_indices,
    f_minus,
    f_plus,
    indicator_tree,
    natural_transform,
    polar_encode,
    sc_decode,
    transmit_bec,
)
from .montecarlo import BoundsValidation, FerEstimate, estimate_fer, validate_bounds, wilson_interval

__all__ = [
    "DecodeResult", "FaultPattern", "bit_reversal_indices", "f_minus", "f_plus",
    "indicator_tree", "natural_transform", "polar_encode", "sc_decode", "transmit_bec",
    "BoundsValidation", "FerEstimate", "estimate_fer", "validate_bounds", "wilson_interval",
]
