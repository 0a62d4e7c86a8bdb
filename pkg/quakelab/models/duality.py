from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, field_validator

from quakelab.core.config import settings
from quakelab.models.geometry import MinkowskiVec


def _vec(value) -> MinkowskiVec:
    if isinstance(value, MinkowskiVec):
        return value
    return MinkowskiVec.from_array(value)


class _QuadricPoint(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    v: MinkowskiVec

    def to_json(self) -> list[float]:
        return self.v.as_array().tolist()


class HPoint(_QuadricPoint):
    """Point of the hyperboloid ⟨v,v⟩ = -1, v0 > 0."""

    @field_validator("v", mode="before")
    @classmethod
    def on_hyperboloid(cls, value) -> MinkowskiVec:
        v = _vec(value)
        if abs(v.norm2 + 1.0) > settings.EPS_QUADRIC or v.x0 <= 0:
            raise ValueError(f"{v} is not on the upper hyperboloid")
        return v


class DSPoint(_QuadricPoint):
    """Point of de Sitter space ⟨v,v⟩ = 1."""

    @field_validator("v", mode="before")
    @classmethod
    def on_de_sitter(cls, value) -> MinkowskiVec:
        v = _vec(value)
        if abs(v.norm2 - 1.0) > settings.EPS_QUADRIC:
            raise ValueError(f"{v} is not on the de Sitter quadric")
        return v


class OrientedPlane(BaseModel):
    """Totally geodesic plane n^⊥ ∩ H³ bounding the half-space {⟨x,n⟩ < 0}."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: MinkowskiVec

    @field_validator("n", mode="before")
    @classmethod
    def unit_spacelike(cls, value) -> MinkowskiVec:
        n = _vec(value)
        if abs(n.norm2 - 1.0) > settings.EPS_QUADRIC:
            raise ValueError(f"plane normal {n} is not unit spacelike")
        return n

    def reversed(self) -> "OrientedPlane":
        return OrientedPlane(n=-self.n)

    def contains_in_half_space(self, x: MinkowskiVec) -> bool:
        return self.n.pair(x) < 0

    def to_json(self) -> list[float]:
        return self.n.as_array().tolist()


class PlanePairKind(str, Enum):
    INTERSECTING = "intersecting"
    ASYMPTOTIC = "asymptotic"
    DISJOINT = "disjoint"


class PlanePairRelation(BaseModel):
    kind: PlanePairKind
    pairing: float
    angle: Optional[float] = None
    dihedral: Optional[float] = None
    distance: Optional[float] = None
    nested: Optional[bool] = None


class SegmentKind(str, Enum):
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"
    TIMELIKE = "timelike"


class SegmentType(BaseModel):
    kind: SegmentKind
    pairing: float
    length: Optional[float] = None
    causal: Optional[bool] = None


class DualEdge(BaseModel):
    faces: tuple[int, int]
    length: float
    dihedral: float


class DualComplex(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    vertices: list[DSPoint]
    edges: list[DualEdge]
