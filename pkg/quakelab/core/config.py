import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Matrix algebra
    EPS_DET: float = 1e-12
    EPS_TR: float = 1e-9
    RENORMALIZE_EVERY: int = 16

    # Holonomy
    EPS_REL: float = 1e-9
    EPS_EARTHQUAKE_REL: float = 1e-8
    EPS_SYS: float = 1e-4
    DISCRETENESS_WORD_LENGTH: int = 6

    # Intersection enumeration
    BUDGET_MAX_RADIUS: int = 12
    BUDGET_WINDOW: int = 3
    BUDGET_MAX_ELEMENTS: int = 400_000
    CROSSING_CLUSTER_TOL: float = 1e-6

    # Solvers
    FD_STEP: float = 1e-6
    INVERT_TOL: float = 1e-10
    INVERT_MAX_ITER: int = 200
    INVERT_RESTARTS: int = 6
    PROJECT_TOL: float = 1e-6
    PROJECT_MAX_ITER: int = 500
    LENGTH_MIN: float = 1e-3
    LENGTH_MAX: float = 50.0
    CONDITION_MAX: float = 1e12

    # Duality
    EPS_LIGHTLIKE: float = 1e-9
    EPS_QUADRIC: float = 1e-10

    # Runtime
    WORKERS: int = 1
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    class Config:
        env_file = ".env"
        env_prefix = "QUAKELAB_"
        case_sensitive = True


settings = Settings()


class Tolerances(BaseModel):
    relator: float = Field(default=settings.EPS_REL, gt=0)
    invert: float = Field(default=settings.INVERT_TOL, gt=0)
    project: float = Field(default=settings.PROJECT_TOL, gt=0)
    fd_step: float = Field(default=settings.FD_STEP, gt=0)


class SuiteSection(BaseModel):
    """Randomized certificate suite for the length estimate."""

    configs: int = Field(default=100, ge=1)
    lengths: tuple[float, float] = (0.5, 3.0)
    twists: tuple[float, float] = (-1.0, 1.0)
    weights: tuple[float, float] = (0.1, 5.0)
    # "pants": random nonempty set of pants curves, "marking": one simple marking curve
    support: Literal["pants", "marking"] = "pants"
    wrong_sign: bool = False
    asymptotic_cases: int = Field(default=30, ge=0)
    t_large: float = Field(default=1e3, gt=0)


class UKMapSection(BaseModel):
    curvatures: list[float] = Field(default_factory=lambda: [-0.9, -0.99, -0.999])
    pairs: int = Field(default=10, ge=1)
    uniform_points: int = Field(default=11, ge=1)


class ProjectSection(BaseModel):
    mu: list[dict] = Field(default_factory=list)
    omega: list[dict] = Field(default_factory=list)
    starts: int = Field(default=5, ge=1)


class DualitySection(BaseModel):
    pairs: int = Field(default=100, ge=1)


class RunConfig(BaseModel):
    schema_version: Literal[1] = 1
    command: str = ""
    seed: int = Field(default=20240601, ge=0, lt=2**64)
    slack: float = Field(default=1e-6, gt=0)
    grid: list[float] = Field(default_factory=lambda: [0.0, 0.1, 1.0, 5.0, 10.0, 50.0])
    budget_radius: int = Field(default=settings.BUDGET_MAX_RADIUS, ge=2)
    budget_window: int = Field(default=settings.BUDGET_WINDOW, ge=2)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    out: str = "out"
    workers: int = Field(default=settings.WORKERS, ge=1)
    surface: Optional[dict] = None
    suite: SuiteSection = Field(default_factory=SuiteSection)
    ukmap: UKMapSection = Field(default_factory=UKMapSection)
    project: ProjectSection = Field(default_factory=ProjectSection)
    duality: DualitySection = Field(default_factory=DualitySection)

    @field_validator("grid")
    @classmethod
    def grid_nonnegative(cls, grid: list[float]) -> list[float]:
        if not grid:
            raise ValueError("t grid must not be empty")
        if any(t < 0 for t in grid):
            raise ValueError("t grid values must be >= 0")
        return grid

    @model_validator(mode="after")
    def window_fits_radius(self) -> "RunConfig":
        if self.budget_window > self.budget_radius:
            raise ValueError("budget window must not exceed the budget radius")
        return self

    @classmethod
    def load(cls, path: Optional[str]) -> "RunConfig":
        if path is None:
            return cls()
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.model_validate(raw)
