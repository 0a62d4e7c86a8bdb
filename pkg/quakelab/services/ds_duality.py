"""Polar duality between H³ and dS³ inside ℝ^{3,1}."""

import logging
import math
from typing import Sequence

from quakelab.core.config import settings
from quakelab.core.errors import ConstructionError, DegenerateConfigurationError, ValidationError
from quakelab.models.duality import (
    DSPoint,
    DualComplex,
    DualEdge,
    OrientedPlane,
    PlanePairKind,
    PlanePairRelation,
    SegmentKind,
    SegmentType,
)
from quakelab.models.surface import FenchelNielsen
from quakelab.models.teich import CurvatureParam, ScaledMetric

logger = logging.getLogger(__name__)


def plane_dual(plane: OrientedPlane) -> DSPoint:
    return DSPoint(v=plane.n)


def point_dual(point: DSPoint) -> OrientedPlane:
    return OrientedPlane(n=point.v)


def _check_distinct(x, y, what: str) -> float:
    p = x.pair(y)
    if x.is_close(y) or x.is_close(-y):
        raise DegenerateConfigurationError(f"degenerate pair: identical or opposite {what}")
    return p


def classify_plane_pair(first: OrientedPlane, second: OrientedPlane) -> PlanePairRelation:
    p = _check_distinct(first.n, second.n, "planes")
    if abs(abs(p) - 1.0) <= settings.EPS_LIGHTLIKE:
        return PlanePairRelation(kind=PlanePairKind.ASYMPTOTIC, pairing=p, distance=0.0, nested=p > 0)
    if abs(p) < 1.0:
        angle = math.acos(p)
        return PlanePairRelation(
            kind=PlanePairKind.INTERSECTING, pairing=p, angle=angle, dihedral=math.pi - angle
        )
    return PlanePairRelation(
        kind=PlanePairKind.DISJOINT, pairing=p, distance=math.acosh(abs(p)), nested=p > 1.0
    )


def dual_segment_type(first: DSPoint, second: DSPoint) -> SegmentType:
    p = _check_distinct(first.v, second.v, "de Sitter points")
    if abs(abs(p) - 1.0) <= settings.EPS_LIGHTLIKE:
        return SegmentType(kind=SegmentKind.LIGHTLIKE, pairing=p, length=0.0, causal=p > 0)
    if abs(p) < 1.0:
        return SegmentType(kind=SegmentKind.SPACELIKE, pairing=p, length=math.acos(p))
    return SegmentType(kind=SegmentKind.TIMELIKE, pairing=p, length=math.acosh(abs(p)), causal=p > 1.0)


def equidistant_curvatures(d: float) -> tuple[float, float]:
    """Curvature of the surface at distance d from a totally geodesic plane, and of its III."""
    if not d > 0:
        raise ValidationError(f"equidistance must be positive, got {d}")
    return -1.0 / math.cosh(d) ** 2, -1.0 / math.sinh(d) ** 2


def equidistance_for_curvature(K: float) -> float:
    """Inverse of the first component of equidistant_curvatures."""
    if not -1.0 < K < 0.0:
        raise ValidationError(f"K must lie in (-1, 0), got {K}")
    return math.acosh(1.0 / math.sqrt(-K))


def third_form_metric(m0: FenchelNielsen, K: CurvatureParam) -> ScaledMetric:
    """III = sinh²(d)·m0 on the equidistant K-surface of a Fuchsian manifold."""
    d = equidistance_for_curvature(K.K)
    _, k_iii = equidistant_curvatures(d)
    gap = abs(k_iii - K.k_star)
    logger.debug(f"K={K.K}: equidistance {d:.6g}, III curvature {k_iii:.6g} vs K*={K.k_star:.6g}")
    if gap > 1e-12 * max(1.0, abs(k_iii)):
        raise ConstructionError(f"III curvature {k_iii!r} disagrees with K*={K.k_star!r}", residual=gap)
    return ScaledMetric(shape=m0, curvature=k_iii)


def polyhedral_dual(planes: Sequence[OrientedPlane], adjacency: Sequence[tuple[int, int]]) -> DualComplex:
    """Dual vertices of a convex cap's faces and dual edges of its adjacent face pairs."""
    edges = []
    for i, j in adjacency:
        if not (0 <= i < len(planes) and 0 <= j < len(planes)) or i == j:
            raise ValidationError(f"bad adjacency pair {(i, j)} for {len(planes)} faces")
        relation = classify_plane_pair(planes[i], planes[j])
        if relation.kind is not PlanePairKind.INTERSECTING:
            raise ValidationError(f"not a convex cap: faces {i} and {j} are {relation.kind.value}")
        edges.append(DualEdge(faces=(i, j), length=relation.angle, dihedral=relation.dihedral))
    return DualComplex(vertices=[plane_dual(p) for p in planes], edges=edges)
