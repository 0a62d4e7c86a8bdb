from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from quakelab.models.lamination import MultiCurve
from quakelab.models.surface import FenchelNielsen, PantsGraph


class EarthquakeMethod(str, Enum):
    FN_TWIST = "fn-twist"
    HOLONOMY_INSERT = "holonomy-insert"


class EarthquakePath(BaseModel):
    model_config = ConfigDict(frozen=True)

    base: FenchelNielsen
    topology: PantsGraph = Field(default_factory=PantsGraph.genus_two)
    lamination: MultiCurve
    t: float = Field(ge=0)
    method: Optional[EarthquakeMethod] = None
    direction: Literal["left", "right"] = "left"

    def at(self, t: float) -> "EarthquakePath":
        """Same path at scale t; t is validated like a freshly built path."""
        return EarthquakePath.model_validate({**dict(self), "t": t})


class CertificateRow(BaseModel):
    t: float
    lower: float
    measured: float
    upper: float
    passed: bool


class LemmaCertificate(BaseModel):
    curve: str
    lamination: list[dict]
    intersection: float
    base_length: float
    slack: float
    rows: list[CertificateRow]
    passed: bool
    slack_used: float

    @model_validator(mode="after")
    def pass_flag_matches_rows(self) -> "LemmaCertificate":
        if self.passed != all(row.passed for row in self.rows):
            raise ValueError("certificate pass flag disagrees with its rows")
        return self
