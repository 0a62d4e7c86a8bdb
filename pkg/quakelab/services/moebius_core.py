"""PSL(2,ℝ) and ℝ^{3,1} kernels.

Isometries act on the upper half-plane; boundary points are handled in homogeneous
coordinates so that ∞ needs no special casing in the Möbius action.
"""

import logging
import math
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from quakelab.core.config import settings
from quakelab.core.errors import DegenerateConfigurationError, NonHyperbolicError
from quakelab.models.geometry import (
    BoundaryPoint,
    GeodesicLine,
    Isometry2,
    IsometryKind,
    MinkowskiVec,
)

logger = logging.getLogger(__name__)

# products are rescaled once an entry leaves this range
_RESCALE_ABOVE = 1e64
# det is computed to about 1e-12 relative only while entries stay below this
_RENORMALIZE_BELOW = 1e2
# beyond this log|trace| the arccosh series is exact to double precision
_LOG_TRACE_ASYMPTOTIC = 20.0

Matrix = tuple[float, float, float, float]


def classify_isometry(g: Isometry2) -> IsometryKind:
    tr = abs(g.trace)
    if tr > 2.0 + settings.EPS_TR:
        return IsometryKind.HYPERBOLIC
    if tr < 2.0 - settings.EPS_TR:
        return IsometryKind.ELLIPTIC
    if g.distance_to(Isometry2.identity()) < settings.EPS_TR:
        return IsometryKind.IDENTITY
    return IsometryKind.PARABOLIC


def _require_hyperbolic(g: Isometry2) -> None:
    kind = classify_isometry(g)
    if kind is not IsometryKind.HYPERBOLIC:
        raise NonHyperbolicError(f"no positive translation length ({kind.value}, trace={g.trace!r})")


def translation_length(g: Isometry2) -> float:
    _require_hyperbolic(g)
    return 2.0 * math.acosh(abs(g.trace) / 2.0)


def length_from_log_trace(log_abs_trace: float) -> float:
    """Translation length from log|tr| of an SL2 matrix, for stretched products."""
    if log_abs_trace > _LOG_TRACE_ASYMPTOTIC:
        return 2.0 * log_abs_trace
    tr = math.exp(log_abs_trace)
    if tr <= 2.0 + settings.EPS_TR:
        raise NonHyperbolicError(f"no positive translation length (trace={tr!r})")
    return 2.0 * math.acosh(tr / 2.0)


def _eigenvector(m: np.ndarray, lam: float) -> np.ndarray:
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    first = np.array([b, lam - a])
    second = np.array([lam - d, c])
    vec = first if np.linalg.norm(first) >= np.linalg.norm(second) else second
    return vec / np.linalg.norm(vec)


def fixed_vectors(g: Isometry2) -> tuple[np.ndarray, np.ndarray]:
    """Homogeneous (attracting, repelling) fixed points of a hyperbolic element."""
    _require_hyperbolic(g)
    m = g.as_array()
    tr = g.trace
    root = math.sqrt(tr * tr - 4.0)
    big = (tr + root) / 2.0
    small = 1.0 / big
    return _eigenvector(m, big), _eigenvector(m, small)


def axis(g: Isometry2) -> GeodesicLine:
    """Axis of g, stored oriented from the repelling to the attracting fixed point."""
    attracting, repelling = fixed_vectors(g)
    return GeodesicLine(
        BoundaryPoint.from_homogeneous(*repelling),
        BoundaryPoint.from_homogeneous(*attracting),
    )


def eigenframe(g: Isometry2) -> np.ndarray:
    """P in SL2 with P⁻¹ g P diagonal, first column attracting."""
    attracting, repelling = fixed_vectors(g)
    det = attracting[0] * repelling[1] - repelling[0] * attracting[1]
    if det < 0:
        repelling = -repelling
        det = -det
    return np.column_stack([attracting, repelling]) / math.sqrt(det)


def apply_to_boundary(g: Isometry2, x: BoundaryPoint) -> BoundaryPoint:
    u, v = g.as_array() @ x.homogeneous()
    return BoundaryPoint.from_homogeneous(u, v)


def apply_to_line(g: Isometry2, line: GeodesicLine) -> GeodesicLine:
    return GeodesicLine(apply_to_boundary(g, line.p), apply_to_boundary(g, line.q))


def _order_key(x: BoundaryPoint) -> tuple[int, float]:
    return (1, 0.0) if x.is_infinite else (0, x.value)


def cyclic_order_sign(p: BoundaryPoint, q: BoundaryPoint, x: BoundaryPoint) -> int:
    """+1 if (p, q, x) is positively ordered on ℝ ∪ {∞}, -1 if negatively, 0 if two coincide.

    x lies to the left of the geodesic oriented p → q exactly when the sign is +1.
    """
    keys = [_order_key(p), _order_key(q), _order_key(x)]
    if len(set(keys)) < 3:
        return 0
    inversions = sum(1 for i in range(3) for j in range(i + 1, 3) if keys[i] > keys[j])
    return 1 if inversions % 2 == 0 else -1


def geodesics_link(first: GeodesicLine, second: GeodesicLine) -> bool:
    if len(first.endpoints | second.endpoints) < 4:
        raise DegenerateConfigurationError("degenerate configuration: geodesics share an endpoint")
    return cyclic_order_sign(first.p, first.q, second.p) != cyclic_order_sign(first.p, first.q, second.q)


def frame_sending(p: BoundaryPoint, q: BoundaryPoint) -> Isometry2:
    """Orientation-preserving isometry taking p to 0 and q to ∞."""
    if p == q:
        raise DegenerateConfigurationError("frame needs two distinct boundary points")
    zero_pre = p.homogeneous()
    inf_pre = q.homogeneous()
    det = inf_pre[0] * zero_pre[1] - zero_pre[0] * inf_pre[1]
    if det < 0:
        zero_pre = -zero_pre
        det = -det
    inverse = np.column_stack([inf_pre, zero_pre]) / math.sqrt(det)
    return Isometry2.from_matrix(np.linalg.inv(inverse))


def translation_along(line: GeodesicLine, amount: float) -> Isometry2:
    """Translation by `amount` along line, positive toward line.q."""
    frame = frame_sending(line.p, line.q)
    half = amount / 2.0
    diag = Isometry2.from_matrix([[math.exp(half), 0.0], [0.0, math.exp(-half)]])
    return frame.inverse().compose(diag).compose(frame)


def left_shear(line: GeodesicLine, amount: float, viewer: BoundaryPoint) -> Isometry2:
    """Shear of the far side of line by `amount`, moving left as seen from viewer's side."""
    sign = cyclic_order_sign(line.p, line.q, viewer)
    if sign == 0:
        raise DegenerateConfigurationError("viewer must not be an endpoint of the shear line")
    oriented = line if sign > 0 else line.reversed()
    return translation_along(oriented, amount)


def hyperbolic_distance(z: complex, w: complex) -> float:
    return math.acosh(1.0 + abs(z - w) ** 2 / (2.0 * z.imag * w.imag))


def distance_to_line(z: complex, line: GeodesicLine) -> float:
    if line.p.is_infinite or line.q.is_infinite:
        foot = line.q.value if line.p.is_infinite else line.p.value
        return math.asinh(abs(z.real - foot) / z.imag)
    center = (line.p.value + line.q.value) / 2.0
    radius = abs(line.p.value - line.q.value) / 2.0
    return math.asinh(abs(abs(z - center) ** 2 - radius**2) / (2.0 * radius * z.imag))


def letter_table(images: Mapping[str, Isometry2]) -> dict[str, Matrix]:
    """Generator images plus inverses (capitalized letters) as plain tuples."""
    table: dict[str, Matrix] = {}
    for name, g in images.items():
        table[name] = (g.a, g.b, g.c, g.d)
        table[name.capitalize()] = (g.d, -g.b, -g.c, g.a)
    return table


def _renormalized(a: float, b: float, c: float, d: float) -> Matrix:
    if max(abs(a), abs(b), abs(c), abs(d)) >= _RENORMALIZE_BELOW:
        return a, b, c, d
    s = math.sqrt(a * d - b * c)
    return a / s, b / s, c / s, d / s


def evaluate_word(table: Mapping[str, Matrix], word: Sequence[str]) -> Isometry2:
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    every = settings.RENORMALIZE_EVERY
    for k, letter in enumerate(word, 1):
        e, f, g, h = table[letter]
        a, b, c, d = a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h
        if k % every == 0:
            a, b, c, d = _renormalized(a, b, c, d)
    return Isometry2.from_sl2([[a, b], [c, d]])


def scaled_product(table: Mapping[str, Matrix], word: Sequence[str]) -> tuple[Matrix, float]:
    """Product of a word as (matrix / e^scale, scale); never overflows."""
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    scale = 0.0
    for letter in word:
        e, f, g, h = table[letter]
        a, b, c, d = a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h
        top = max(abs(a), abs(b), abs(c), abs(d))
        if top > _RESCALE_ABOVE:
            a, b, c, d = a / top, b / top, c / top, d / top
            scale += math.log(top)
    return (a, b, c, d), scale


def word_translation_length(table: Mapping[str, Matrix], word: Sequence[str]) -> float:
    (a, b, c, d), scale = scaled_product(table, word)
    if scale == 0.0:
        return translation_length(evaluate_word(table, word))
    tr = abs(a + d)
    if tr == 0.0:
        raise NonHyperbolicError("no positive translation length (trace underflow)")
    return length_from_log_trace(math.log(tr) + scale)


# ---------------------------------------------------------------- ℝ^{3,1}

MINKOWSKI_METRIC = np.diag([-1.0, 1.0, 1.0, 1.0])


def lorentz_boost(direction: Sequence[float], rapidity: float) -> np.ndarray:
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)
    boost = np.eye(4)
    boost[0, 0] = ch
    boost[0, 1:] = sh * n
    boost[1:, 0] = sh * n
    boost[1:, 1:] += (ch - 1.0) * np.outer(n, n)
    return boost


def lorentz_rotation(rotation: Rotation) -> np.ndarray:
    out = np.eye(4)
    out[1:, 1:] = rotation.as_matrix()
    return out


def random_lorentz(rng: np.random.Generator, max_rapidity: float = 1.5) -> np.ndarray:
    """Orthochronous Lorentz transform: rotation ∘ boost ∘ rotation."""
    first = Rotation.random(random_state=rng)
    second = Rotation.random(random_state=rng)
    boost = lorentz_boost(rng.normal(size=3), rng.uniform(0.0, max_rapidity))
    return lorentz_rotation(first) @ boost @ lorentz_rotation(second)


def apply_lorentz(transform: np.ndarray, v: MinkowskiVec) -> MinkowskiVec:
    return MinkowskiVec.from_array(transform @ v.as_array())
