# resonance_lab/exact/__init__.py
from resonance_lab.exact.rootfind import (
    ComputedResonance,
    LocateResult,
    Rectangle,
    SpectralWindow,
    count_zeros,
    locate_all,
    match_predictions,
)
from resonance_lab.exact.shooting import constant_well_roots, outgoing_residual, outgoing_residuals

__all__ = [
    "ComputedResonance",
    "LocateResult",
    "Rectangle",
    "SpectralWindow",
    "constant_well_roots",
    "count_zeros",
    "locate_all",
    "match_predictions",
    "outgoing_residual",
    "outgoing_residuals",
]
