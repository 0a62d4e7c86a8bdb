"""Geometric intersection numbers from holonomy.

A curve pair is put in a frame where the axis of γ is the imaginary axis. Lifts of δ are
enumerated over a pruned ball of the orbit of i, and the lifts crossing the imaginary
axis are counted modulo the translation by γ. The same enumeration, restricted to a
bounded segment instead of a folded axis, finds the lifts a generator path crosses.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from quakelab.core.config import settings
from quakelab.core.errors import BudgetExhaustedError, ValidationError
from quakelab.models.geometry import BoundaryPoint, GeodesicLine, Isometry2
from quakelab.models.lamination import EnumerationBudget, MultiCurve
from quakelab.models.surface import CurveClass, FuchsianRep, Word, rotations
from quakelab.services.moebius_core import (
    apply_to_line,
    distance_to_line,
    eigenframe,
    evaluate_word,
    frame_sending,
    translation_length,
)

logger = logging.getLogger(__name__)

# homogeneous endpoint components below this are treated as 0 or ∞
_ENDPOINT_EPS = 1e-9
# extra pruning radius beyond the largest generator displacement
_PRUNE_MARGIN = 1.0
_KEY_SCALE = 1e7


@dataclass(frozen=True)
class CrossingLift:
    """A lift met by the enumeration, in frame coordinates."""

    height: float  # log of the crossing height on the imaginary axis
    shape: float  # log(m / -n) for endpoints n < 0 < m
    line: GeodesicLine
    component: int = 0


def _diag_scale(height: float) -> np.ndarray:
    root = math.sqrt(height)
    return np.array([[1.0 / root, 0.0], [0.0, root]])


def _line_in_frame(frame: np.ndarray, g: Isometry2) -> tuple[np.ndarray, np.ndarray]:
    """Homogeneous unit endpoints of the axis of g after applying frame."""
    cols = eigenframe(g)
    ends = frame @ cols
    return ends[:, 0] / np.linalg.norm(ends[:, 0]), ends[:, 1] / np.linalg.norm(ends[:, 1])


def _as_line(p: np.ndarray, q: np.ndarray) -> GeodesicLine:
    return GeodesicLine(BoundaryPoint.from_homogeneous(*p), BoundaryPoint.from_homogeneous(*q))


def _imaginary_axis_offset(p: np.ndarray, q: np.ndarray) -> tuple[float, float]:
    """(distance from the imaginary axis, height of the closest point on it)."""
    if min(abs(p[0]), abs(p[1]), abs(q[0]), abs(q[1])) < _ENDPOINT_EPS:
        return 0.0, 1.0
    x, y = p[0] / p[1], q[0] / q[1]
    height = math.sqrt(abs(x * y))
    if x * y < 0:
        return 0.0, height
    return distance_to_line(1j * height, GeodesicLine.through(x, y)), height


class _OrbitBall:
    """Breadth-first enumeration of group elements in frame coordinates."""

    def __init__(self, generators: np.ndarray, prune_radius: float):
        self.generators = generators
        self.inverse_index = np.array([(k + 1) if k % 2 == 0 else (k - 1) for k in range(len(generators))])
        self.cosh_prune = math.cosh(prune_radius)
        self.layer = np.eye(2)[None, :, :]
        self.last = np.array([-1])
        self.visited: set[tuple[int, int]] = {self._keys(self.layer)[0]}

    def next_layer_bound(self) -> int:
        """Elements held after the next `grow`, counting the unfiltered products."""
        return len(self.visited) + len(self.layer) * (len(self.generators) - 1) + int(np.sum(self.last < 0))

    @staticmethod
    def _keys(mats: np.ndarray) -> list[tuple[int, int]]:
        a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
        denom = c * c + d * d
        x = (a * c + b * d) / denom
        y = 1.0 / denom
        kx = np.rint(x / y * _KEY_SCALE).astype(np.int64)
        ky = np.rint(np.log(y) * _KEY_SCALE).astype(np.int64)
        return list(zip(kx.tolist(), ky.tolist()))

    def grow(self) -> np.ndarray:
        """Next layer of new elements inside the pruning ball."""
        batches, lasts = [], []
        for j, gen in enumerate(self.generators):
            keep = self.last != self.inverse_index[j]
            if not keep.any():
                continue
            batches.append(self.layer[keep] @ gen)
            lasts.append(np.full(int(keep.sum()), j))
        if not batches:
            self.layer = np.empty((0, 2, 2))
            self.last = np.empty(0, dtype=int)
            return self.layer
        mats = np.concatenate(batches)
        last = np.concatenate(lasts)
        inside = np.einsum("nij,nij->n", mats, mats) / 2.0 <= self.cosh_prune
        mats, last = mats[inside], last[inside]
        fresh = []
        for k, key in enumerate(self._keys(mats)):
            if key not in self.visited:
                self.visited.add(key)
                fresh.append(k)
        self.layer = mats[fresh] if fresh else np.empty((0, 2, 2))
        self.last = last[fresh] if fresh else np.empty(0, dtype=int)
        return self.layer


def _crossings(mats: np.ndarray, p: np.ndarray, q: np.ndarray) -> list[tuple[float, float, np.ndarray, np.ndarray]]:
    if len(mats) == 0:
        return []
    ps = mats @ p
    qs = mats @ q
    ps /= np.linalg.norm(ps, axis=1)[:, None]
    qs /= np.linalg.norm(qs, axis=1)[:, None]
    tiny = np.min(np.abs(np.concatenate([ps, qs], axis=1)), axis=1) < _ENDPOINT_EPS
    crossing = (ps[:, 0] * ps[:, 1] * qs[:, 0] * qs[:, 1] < 0) & ~tiny
    out = []
    for k in np.flatnonzero(crossing):
        x = ps[k, 0] / ps[k, 1]
        y = qs[k, 0] / qs[k, 1]
        neg, pos = (x, y) if x < 0 else (y, x)
        out.append((0.5 * math.log(-neg * pos), math.log(pos / -neg), ps[k], qs[k]))
    return out


def _cluster(hits: Sequence[tuple], tol: float, period: Optional[float]) -> list[tuple]:
    reps: list[tuple] = []
    for hit in sorted(hits, key=lambda h: h[0]):
        s, shape = hit[0], hit[1]
        if period is not None:
            s = s % period
        for rep in reps:
            ds = abs(s - rep[0])
            if period is not None:
                ds = min(ds, period - ds)
            if ds < tol and abs(shape - rep[1]) < tol:
                break
        else:
            reps.append((s, shape) + tuple(hit[2:]))
    return reps


def _enumerate(
    generators: np.ndarray,
    p: np.ndarray,
    q: np.ndarray,
    relevant_radius: float,
    budget: EnumerationBudget,
    min_radius: int = 1,
    period: Optional[float] = None,
    half_window: Optional[float] = None,
    label: str = "",
) -> list[tuple]:
    """Distinct lifts of the line (p, q) crossing the imaginary axis.

    With `period`, crossings are folded modulo the translation z ↦ e^period z; with
    `half_window`, only crossings with |log height| < half_window are kept. The count is
    final once it has been constant for `budget.window` consecutive radii, none of them
    below `min_radius`.
    """
    displacement = max(math.acosh(max(1.0, float(np.sum(g * g)) / 2.0)) for g in generators)
    ball = _OrbitBall(generators, relevant_radius + displacement + _PRUNE_MARGIN)
    tol = settings.CROSSING_CLUSTER_TOL

    hits = [(s, sh, pp, qq) for s, sh, pp, qq in _crossings(np.eye(2)[None], p, q)]
    counts: list[int] = []
    for radius in range(1, budget.max_radius + 1):
        if ball.next_layer_bound() > budget.max_elements:
            raise BudgetExhaustedError(
                f"{label} would enumerate more than {budget.max_elements} elements at radius {radius}",
                counts[-2:],
            )
        layer = ball.grow()
        for hit in _crossings(layer, p, q):
            if half_window is None or abs(hit[0]) < half_window:
                hits.append(hit)
        reps = _cluster(hits, tol, period)
        counts.append(len(reps))
        logger.debug(f"{label} radius {radius}: {len(ball.visited)} elements, {len(reps)} lifts")
        if len(layer) == 0:
            return reps
        if radius - budget.window + 1 >= min_radius and len(set(counts[-budget.window:])) == 1:
            return reps
    raise BudgetExhaustedError(f"{label} did not stabilize within radius {budget.max_radius}", counts[-2:])


def _frame_generators(rep: FuchsianRep, frame: np.ndarray) -> np.ndarray:
    inv = np.linalg.inv(frame)
    mats = []
    for name in rep.topology.generators:
        g = rep.images[name].as_array()
        mats.append(frame @ g @ inv)
        mats.append(frame @ np.linalg.inv(g) @ inv)
    return np.array(mats)


def _axis_frame_choice(rep: FuchsianRep, gamma: Word, delta: Word) -> tuple[np.ndarray, Isometry2, Isometry2, float]:
    """Frame for γ's axis with i at the point closest to the nearest chosen lift of δ."""
    best = None
    for g_word in rotations(gamma):
        g = evaluate_word(rep.table, g_word)
        frame = np.linalg.inv(eigenframe(g))
        for d_word in rotations(delta):
            d = evaluate_word(rep.table, d_word)
            p, q = _line_in_frame(frame, d)
            offset, height = _imaginary_axis_offset(p, q)
            if best is None or offset < best[0] - 1e-12:
                best = (offset, _diag_scale(height) @ frame, g, d)
    offset, frame, g, d = best
    return frame, g, d, offset


def intersection_number(
    rep: FuchsianRep,
    gamma: CurveClass,
    delta: CurveClass,
    budget: Optional[EnumerationBudget] = None,
) -> int:
    """Geometric intersection number of two primitive closed curves.

    Intersection numbers are topological, so the base images are used directly and the
    rep's Dehn-twist marking is ignored. For gamma == delta this is the self-linking
    count, twice the number of double points.
    """
    budget = budget or EnumerationBudget()
    frame, g, d, offset = _axis_frame_choice(rep, gamma.word, delta.word)
    len_g, len_d = translation_length(g), translation_length(d)
    p, q = _line_in_frame(frame, d)
    relevant = offset + (len_g + len_d) / 2.0 + 1e-6
    reps = _enumerate(
        _frame_generators(rep, frame),
        p,
        q,
        relevant,
        budget,
        min_radius=len(gamma.word) + len(delta.word),
        period=len_g,
        label=f"i({gamma},{delta})",
    )
    logger.debug(f"i({gamma}, {delta}) = {len(reps)}")
    return len(reps)


def lamination_intersection(
    rep: FuchsianRep,
    lamination: MultiCurve,
    gamma: CurveClass,
    budget: Optional[EnumerationBudget] = None,
    cache: Optional["IntersectionCache"] = None,
) -> float:
    total = 0.0
    for comp in lamination.components:
        if cache is not None:
            count = cache.get(rep, gamma, comp.curve, budget)
        else:
            count = intersection_number(rep, gamma, comp.curve, budget)
        total += comp.weight * count
    return total


def is_simple(rep: FuchsianRep, gamma: CurveClass, budget: Optional[EnumerationBudget] = None) -> bool:
    return intersection_number(rep, gamma, gamma, budget) == 0


def self_intersection_number(rep: FuchsianRep, gamma: CurveClass, budget: Optional[EnumerationBudget] = None) -> int:
    return intersection_number(rep, gamma, gamma, budget) // 2


def verify_lamination(rep: FuchsianRep, lamination: MultiCurve, budget: Optional[EnumerationBudget] = None) -> None:
    """Raise unless every component is simple and components are pairwise disjoint."""
    curves = lamination.curves
    for k, curve in enumerate(curves):
        if not is_simple(rep, curve, budget):
            raise ValidationError(f"lamination component {curve} is not simple")
        for other in curves[k + 1:]:
            if intersection_number(rep, curve, other, budget):
                raise ValidationError(f"lamination components {curve} and {other} intersect")


class IntersectionCache:
    """Memo of intersection numbers by word pair; valid across metrics of one surface."""

    def __init__(self, counts: Optional[dict[tuple[Word, Word], int]] = None):
        self._counts: dict[tuple[Word, Word], int] = dict(counts or {})

    def get(self, rep: FuchsianRep, gamma: CurveClass, delta: CurveClass, budget=None) -> int:
        key = (gamma.word, delta.word)
        if key not in self._counts:
            self._counts[key] = intersection_number(rep, gamma, delta, budget)
            self._counts[(delta.word, gamma.word)] = self._counts[key]
        return self._counts[key]

    def __len__(self) -> int:
        return len(self._counts)

    def __contains__(self, key: tuple[Word, Word]) -> bool:
        return key in self._counts

    def snapshot(self) -> dict[tuple[Word, Word], int]:
        return dict(self._counts)


# ------------------------------------------------------------------ generator paths

def _segment_frame(x0: complex, y0: complex) -> tuple[np.ndarray, float]:
    """Frame sending x0, y0 to i·e^{∓D/2} on the imaginary axis; returns (frame, D)."""
    yx = math.sqrt(x0.imag)
    to_i = np.array([[1.0 / yx, -x0.real / yx], [0.0, yx]])
    w = (to_i[0, 0] * y0 + to_i[0, 1]) / (to_i[1, 1])
    if abs(w.real) < 1e-14 * abs(w):
        ends = (BoundaryPoint(0.0), BoundaryPoint.infinity())
    else:
        center = (abs(w) ** 2 - 1.0) / (2.0 * w.real)
        radius = math.sqrt(1.0 + center * center)
        ends = (BoundaryPoint(center - radius), BoundaryPoint(center + radius))
    for p, q in (ends, ends[::-1]):
        frame = frame_sending(p, q).as_array() @ to_i
        lo = _apply(frame, x0)
        hi = _apply(frame, y0)
        if hi.imag > lo.imag:
            break
    distance = math.log(hi.imag / lo.imag)
    centre = math.sqrt(hi.imag * lo.imag)
    return _diag_scale(centre) @ frame, distance


def _apply(m: np.ndarray, z: complex) -> complex:
    return (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])


def path_crossings(
    rep: FuchsianRep,
    x0: complex,
    y0: complex,
    lamination: MultiCurve,
    budget: Optional[EnumerationBudget] = None,
) -> tuple[np.ndarray, list[CrossingLift]]:
    """Lifts of lamination components crossing the segment [x0, y0], ordered from x0.

    Returns the segment frame and the crossings in frame coordinates.
    """
    budget = budget or EnumerationBudget()
    frame, distance = _segment_frame(x0, y0)
    generators = _frame_generators(rep, frame)
    found: list[CrossingLift] = []
    for index, comp in enumerate(lamination.components):
        best = None
        for d_word in rotations(comp.curve.word):
            d = evaluate_word(rep.table, d_word)
            p, q = _line_in_frame(frame, d)
            offset = distance_to_line(1j, _as_line(p, q))
            if best is None or offset < best[0] - 1e-12:
                best = (offset, d, p, q)
        offset, d, p, q = best
        relevant = offset + (distance + translation_length(d)) / 2.0 + 1e-6
        reps = _enumerate(
            generators,
            p,
            q,
            relevant,
            budget,
            min_radius=len(comp.curve.word),
            half_window=distance / 2.0,
            label=f"path x {comp.curve}",
        )
        for s, shape, pp, qq in reps:
            if abs(abs(s) - distance / 2.0) < 1e-9:
                raise ValidationError("base point lies on a lamination lift; choose another")
            found.append(CrossingLift(height=s, shape=shape, line=_as_line(pp, qq), component=index))
    found.sort(key=lambda c: c.height)
    return frame, found
