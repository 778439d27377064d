# resonance_lab/classical/__init__.py
from resonance_lab.classical.dynamics import (
    FlowState,
    GapReport,
    PointType,
    classify_interface,
    diam,
    flow,
    gap_report,
)

__all__ = ["FlowState", "GapReport", "PointType", "classify_interface", "diam", "flow", "gap_report"]
