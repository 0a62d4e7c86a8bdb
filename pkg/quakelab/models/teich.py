import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator

from quakelab.models.surface import FenchelNielsen


class CurvatureParam(BaseModel):
    """Curvature K of a K-surface and the curvature K* = K/(K+1) of its third form."""

    model_config = ConfigDict(frozen=True)

    K: float = Field(gt=-1.0, lt=0.0)

    @computed_field
    @property
    def k_star(self) -> float:
        return self.K / (self.K + 1.0)

    @property
    def scale(self) -> float:
        """√|K*|, the factor relating lengths of h and of m = |K*|·h."""
        return math.sqrt(abs(self.k_star))


class ScaledMetric(BaseModel):
    """h = (1/|κ|)·m for the hyperbolic metric m with coordinates `shape`."""

    model_config = ConfigDict(frozen=True)

    shape: FenchelNielsen
    curvature: float = Field(lt=0.0)

    def length_factor(self) -> float:
        return 1.0 / math.sqrt(abs(self.curvature))


class SolveReport(BaseModel):
    converged: bool
    iterations: int
    residual: float
    tolerance: float
    condition: Optional[float] = None
    solution: list[float] = Field(default_factory=list)
    starts_tried: int = 1
    message: str = ""

    @field_validator("residual")
    @classmethod
    def finite_residual(cls, value: float) -> float:
        return value if math.isfinite(value) else float("inf")


class InverseEstimateRow(BaseModel):
    curve: str
    lower: float
    intersection: float
    upper: float
    passed: bool


class UMapReport(BaseModel):
    K: float
    k_star: float
    weights: list[float]
    lamination: list[dict]
    solve: SolveReport
    inverse_estimate: list[InverseEstimateRow] = Field(default_factory=list)


class UniformSweepRow(BaseModel):
    K: float
    t: float
    curve: str
    length_h: float
    intersection_u: float
    deviation: float
    bound: float
    passed: bool


class UniformSweepReport(BaseModel):
    rows: list[UniformSweepRow]
    max_deviation: dict[str, float]
    bounds: dict[str, float]
    passed: bool
