"""Value types of the plane and Minkowski-space kernels."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from quakelab.core.config import settings
from quakelab.core.errors import DegenerateConfigurationError, ValidationError


class IsometryKind(str, Enum):
    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class Isometry2:
    """Orientation-preserving isometry of the upper half-plane, det 1, trace >= 0."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_matrix(cls, m) -> "Isometry2":
        arr = np.asarray(m, dtype=float).reshape(2, 2)
        det = arr[0, 0] * arr[1, 1] - arr[0, 1] * arr[1, 0]
        if not det > 0:
            raise ValidationError(f"matrix with det {det!r} is not orientation preserving")
        return cls._with_sign(arr / math.sqrt(det))

    @classmethod
    def from_sl2(cls, m) -> "Isometry2":
        """Matrix already of det 1 up to rounding, e.g. a product of isometries.

        Only the sign is normalized; det is not recomputed from the entries.
        """
        return cls._with_sign(np.asarray(m, dtype=float).reshape(2, 2))

    @classmethod
    def _with_sign(cls, arr: np.ndarray) -> "Isometry2":
        tr = arr[0, 0] + arr[1, 1]
        if tr < 0 or (tr == 0 and (arr[1, 0] < 0 or (arr[1, 0] == 0 and arr[1, 1] < 0))):
            arr = -arr
        return cls(float(arr[0, 0]), float(arr[0, 1]), float(arr[1, 0]), float(arr[1, 1]))

    @classmethod
    def identity(cls) -> "Isometry2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def trace(self) -> float:
        return self.a + self.d

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def compose(self, other: "Isometry2") -> "Isometry2":
        """self ∘ other."""
        return Isometry2.from_sl2(self.as_array() @ other.as_array())

    __matmul__ = compose

    def inverse(self) -> "Isometry2":
        return Isometry2.from_sl2([[self.d, -self.b], [-self.c, self.a]])

    def conjugate_by(self, h: "Isometry2") -> "Isometry2":
        """h · self · h⁻¹."""
        return h.compose(self).compose(h.inverse())

    def __call__(self, z: complex) -> complex:
        return (self.a * z + self.b) / (self.c * z + self.d)

    def distance_to(self, other: "Isometry2") -> float:
        return float(np.max(np.abs(self.as_array() - other.as_array())))


@dataclass(frozen=True)
class BoundaryPoint:
    """Point of ℝ ∪ {∞}; infinity is stored as +inf."""

    value: float

    def __post_init__(self):
        if math.isnan(self.value):
            raise ValidationError("boundary point cannot be NaN")
        if self.value == -math.inf:
            object.__setattr__(self, "value", math.inf)

    @classmethod
    def infinity(cls) -> "BoundaryPoint":
        return cls(math.inf)

    @classmethod
    def from_homogeneous(cls, u: float, v: float) -> "BoundaryPoint":
        if v == 0:
            return cls.infinity()
        return cls(u / v)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def homogeneous(self) -> np.ndarray:
        """Unit representative (u, v) with point u/v."""
        if self.is_infinite:
            return np.array([1.0, 0.0])
        vec = np.array([self.value, 1.0])
        return vec / np.linalg.norm(vec)

    def __repr__(self) -> str:
        return "BoundaryPoint(∞)" if self.is_infinite else f"BoundaryPoint({self.value!r})"


@dataclass(frozen=True)
class GeodesicLine:
    """Unordered pair of distinct boundary points."""

    p: BoundaryPoint
    q: BoundaryPoint

    def __post_init__(self):
        if self.p == self.q:
            raise DegenerateConfigurationError("geodesic endpoints must be distinct")

    @classmethod
    def through(cls, p: float, q: float) -> "GeodesicLine":
        return cls(BoundaryPoint(p), BoundaryPoint(q))

    @property
    def endpoints(self) -> frozenset:
        return frozenset((self.p, self.q))

    def __eq__(self, other) -> bool:
        if not isinstance(other, GeodesicLine):
            return NotImplemented
        return self.endpoints == other.endpoints

    def __hash__(self) -> int:
        return hash(self.endpoints)

    def reversed(self) -> "GeodesicLine":
        return GeodesicLine(self.q, self.p)


@dataclass(frozen=True)
class MinkowskiVec:
    """Vector of ℝ^{3,1}, pairing -x0 y0 + x1 y1 + x2 y2 + x3 y3."""

    x0: float
    x1: float
    x2: float
    x3: float

    @classmethod
    def from_array(cls, arr) -> "MinkowskiVec":
        x = np.asarray(arr, dtype=float).reshape(4)
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, self.x1, self.x2, self.x3])

    def pair(self, other: "MinkowskiVec") -> float:
        return -self.x0 * other.x0 + self.x1 * other.x1 + self.x2 * other.x2 + self.x3 * other.x3

    @property
    def norm2(self) -> float:
        return self.pair(self)

    def __add__(self, other: "MinkowskiVec") -> "MinkowskiVec":
        return MinkowskiVec.from_array(self.as_array() + other.as_array())

    def __neg__(self) -> "MinkowskiVec":
        return MinkowskiVec.from_array(-self.as_array())

    def scaled(self, s: float) -> "MinkowskiVec":
        return MinkowskiVec.from_array(s * self.as_array())

    def is_close(self, other: "MinkowskiVec", tol: float = settings.EPS_QUADRIC) -> bool:
        return bool(np.max(np.abs(self.as_array() - other.as_array())) < tol)
