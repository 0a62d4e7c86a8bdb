from quakelab.models.geometry import BoundaryPoint, GeodesicLine, Isometry2, MinkowskiVec
from quakelab.models.lamination import EnumerationBudget, MultiCurve
from quakelab.models.surface import CurveClass, FenchelNielsen, FuchsianRep, PantsGraph

__all__ = [
    "BoundaryPoint",
    "GeodesicLine",
    "Isometry2",
    "MinkowskiVec",
    "EnumerationBudget",
    "MultiCurve",
    "CurveClass",
    "FenchelNielsen",
    "FuchsianRep",
    "PantsGraph",
]
