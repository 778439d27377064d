# resonance_lab/semiclassical/__init__.py
from resonance_lab.semiclassical.asymptotic import ResonancePrediction, Tier, index_set, predict, predict_all
from resonance_lab.semiclassical.quadrature import action, complex_phase, invert_action, period

__all__ = [
    "ResonancePrediction",
    "Tier",
    "action",
    "complex_phase",
    "index_set",
    "invert_action",
    "period",
    "predict",
    "predict_all",
]
