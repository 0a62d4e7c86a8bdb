from typing import Iterable, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from quakelab.core.config import settings
from quakelab.models.surface import CurveClass, format_word


class EnumerationBudget(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_radius: int = settings.BUDGET_MAX_RADIUS
    window: int = settings.BUDGET_WINDOW
    max_elements: int = Field(default=settings.BUDGET_MAX_ELEMENTS, gt=0)

    @model_validator(mode="after")
    def radius_covers_window(self) -> "EnumerationBudget":
        if not self.max_radius >= self.window >= 2:
            raise ValueError(f"need max_radius >= window >= 2, got {self.max_radius}/{self.window}")
        return self


class LaminationComponent(BaseModel):
    model_config = ConfigDict(frozen=True)

    curve: CurveClass
    weight: float = Field(gt=0)


CurveLike = Union[CurveClass, str]


class MultiCurve(BaseModel):
    """Weighted multicurve. Disjointness and simplicity are checked by
    `laminations.verify_lamination`, which needs a surface to compute with."""

    model_config = ConfigDict(frozen=True)

    components: tuple[LaminationComponent, ...] = ()

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[CurveLike, float]]) -> "MultiCurve":
        comps = []
        for curve, weight in pairs:
            if not isinstance(curve, CurveClass):
                curve = CurveClass.parse(curve)
            comps.append(LaminationComponent(curve=curve, weight=float(weight)))
        return cls(components=tuple(comps))

    @classmethod
    def from_json(cls, items: Sequence[dict]) -> "MultiCurve":
        return cls.from_pairs(
            (CurveClass.parse(item["word"], name=item.get("name")), item["weight"]) for item in items
        )

    def to_json(self) -> list[dict]:
        return [{"word": format_word(c.curve.word), "weight": c.weight} for c in self.components]

    @property
    def curves(self) -> list[CurveClass]:
        return [c.curve for c in self.components]

    @property
    def weights(self) -> list[float]:
        return [c.weight for c in self.components]

    @property
    def is_empty(self) -> bool:
        return not self.components

    def scaled(self, factor: float) -> "MultiCurve":
        if factor < 0:
            raise ValueError("multicurves scale by nonnegative factors only")
        if factor == 0:
            return MultiCurve()
        return MultiCurve.from_pairs((c.curve, c.weight * factor) for c in self.components)

    def __add__(self, other: "MultiCurve") -> "MultiCurve":
        return MultiCurve(components=self.components + other.components)

    def describe(self) -> str:
        return " + ".join(f"{c.weight:g}*{c.curve}" for c in self.components) or "0"
