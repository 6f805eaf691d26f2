"""districtkit: redistricting data preparation, ReCom ensembles and seats-won outlier analysis."""
from .graph import DualGraph, build_graph, mend_small_rook
from .layer import GeoLayer, Unit, snap_points
from .repair import DoctorReport, RepairOptions, doctor, smart_repair

__version__ = "0.1.0"

__all__ = [
    "DoctorReport", "DualGraph", "GeoLayer", "RepairOptions", "Unit", "build_graph", "doctor",
    "mend_small_rook", "smart_repair", "snap_points",
]
