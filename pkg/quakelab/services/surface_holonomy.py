"""Fuchsian holonomy of genus-2 surfaces from Fenchel-Nielsen coordinates.

The surface is two one-holed tori glued along the separating curve c2. Each torus is
built with its dual curve's axis meeting the pants curve's axis perpendicularly (zero
twist). Twists are then applied as left shears, and whole multiples of a pants length are
moved into a Dehn-twist marking so generator matrices stay bounded. The glued surface is
written in a frame centered on c2, which sits between the two handles and keeps the
generators of both at comparable norms.
"""

import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from quakelab.core.config import settings
from quakelab.core.errors import (
    ConstructionError,
    NonHyperbolicError,
    UnsupportedTopologyError,
    ValidationError,
)
from quakelab.models.geometry import GeodesicLine, Isometry2
from quakelab.models.surface import (
    GENUS_TWO_CURVE_WORDS,
    CurveClass,
    FenchelNielsen,
    FuchsianRep,
    PantsGraph,
    SurfaceDiagnostics,
    Word,
    cyclic_reduce,
    free_reduce,
    format_word,
    invert_word,
    marking_set,
    parse_word,
    word_power,
)
from quakelab.services.moebius_core import (
    apply_to_line,
    axis,
    evaluate_word,
    frame_sending,
    left_shear,
    letter_table,
    word_translation_length,
)

logger = logging.getLogger(__name__)

COMMUTATOR_ONE: Word = ("a1", "b1", "A1", "B1")
SEPARATING_AXIS = GeodesicLine.through(0.0, math.inf)


def _one_holed_torus(length_b: float, length_boundary: float) -> tuple[Isometry2, Isometry2]:
    """(A, B) with tr B = 2cosh(ℓ_b/2), tr[A,B] = -2cosh(ℓ_∂/2), perpendicular axes at i."""
    beta = length_b / 2.0
    mu = math.exp(beta)
    y = 2.0 * math.cosh(beta)
    kappa = -2.0 * math.cosh(length_boundary / 2.0)
    x = math.sqrt((y * y - 2.0 - kappa) / math.sinh(beta) ** 2)
    off = math.sqrt(x * x / 4.0 - 1.0)
    a = Isometry2.from_matrix([[x / 2.0, off], [off, x / 2.0]])
    b = Isometry2.from_matrix([[mu, 0.0], [0.0, 1.0 / mu]])
    return a, b


def _commutator(a: Isometry2, b: Isometry2) -> Isometry2:
    return a.compose(b).compose(a.inverse()).compose(b.inverse())


def _centered_on_boundary(boundary: Isometry2, toward_infinity: bool) -> Isometry2:
    """Isometry putting the axis of boundary on the imaginary axis, the point of the
    axis nearest i landing on i."""
    line = axis(boundary)
    if toward_infinity:
        return frame_sending(line.p, line.q)
    return frame_sending(line.q, line.p)


def _full_twist_sign(full: Isometry2, target: Isometry2) -> int:
    """+1 if the shear by one full length equals target, -1 if it equals its inverse."""
    return 1 if full.distance_to(target) <= full.distance_to(target.inverse()) else -1


def _twist_handle(a: Isometry2, b: Isometry2, amount: float, length_b: float) -> tuple[Isometry2, int]:
    """Left twist along the curve b inside one handle: a ↦ S·a."""
    line = axis(b)
    moved = apply_to_line(a, line)
    shear = left_shear(moved, amount, line.p)
    full = left_shear(moved, length_b, line.p)
    sign = _full_twist_sign(a.inverse().compose(full).compose(a), b)
    return shear.compose(a), sign


def _split_twist(twist: float, length: float) -> tuple[int, float]:
    turns = int(round(twist / length))
    return turns, twist - turns * length


def dehn_twist_substitution(curve_id: str, power: int = 1) -> dict[str, Word]:
    """Word automorphism of a full Dehn twist along a genus-2 pants curve."""
    if curve_id == "c1":
        return {"a1": free_reduce(("a1",) + word_power(("b1",), power))}
    if curve_id == "c3":
        return {"a2": free_reduce(("a2",) + word_power(("b2",), power))}
    if curve_id == "c2":
        conj = word_power(COMMUTATOR_ONE, power)
        back = invert_word(conj)
        return {
            "a2": free_reduce(conj + ("a2",) + back),
            "b2": free_reduce(conj + ("b2",) + back),
        }
    raise UnsupportedTopologyError(f"no Dehn twist substitution for curve {curve_id!r}")


def _marking(turns: Sequence[int]) -> dict[str, Word]:
    n1, n2, n3 = turns
    marking: dict[str, Word] = {}
    if n1:
        marking["a1"] = free_reduce(("a1",) + word_power(("b1",), n1))
    if n2 or n3:
        conj = word_power(COMMUTATOR_ONE, n2)
        a2 = free_reduce(conj + ("a2",) + word_power(("b2",), n3) + invert_word(conj))
        marking["a2"] = a2
        if n2:
            marking["b2"] = free_reduce(conj + ("b2",) + invert_word(conj))
    return marking


def _check_topology(topo: PantsGraph) -> None:
    if topo.genus != 2:
        raise UnsupportedTopologyError(f"holonomy construction supports genus 2 only, got {topo.genus}")
    for cid, word in GENUS_TWO_CURVE_WORDS.items():
        if cid not in topo.curve_words or cyclic_reduce(topo.curve_words[cid]) != parse_word(word):
            raise UnsupportedTopologyError(
                f"pants curve {cid!r} must be {word!r} for the genus-2 construction"
            )


def relator_residual(images: dict[str, Isometry2], topo: PantsGraph) -> float:
    product = evaluate_word(letter_table(images), topo.relator)
    return product.distance_to(Isometry2.identity())


def holonomy_from_fn(
    fn: FenchelNielsen,
    topo: Optional[PantsGraph] = None,
    strict: bool = True,
    tolerance: Optional[float] = None,
) -> FuchsianRep:
    topo = topo or PantsGraph.genus_two()
    _check_topology(topo)
    if len(fn.lengths) != 3:
        raise ValidationError(f"genus 2 needs 3 Fenchel-Nielsen pairs, got {len(fn.lengths)}")
    l1, l2, l3 = fn.lengths
    (k1, r1), (k2, r2), (k3, r3) = (
        _split_twist(t, length) for t, length in zip(fn.twists, fn.lengths)
    )

    a1, b1 = _one_holed_torus(l1, l2)
    a1, sign1 = _twist_handle(a1, b1, r1, l1)
    a2, b2 = _one_holed_torus(l3, l2)
    a2, sign3 = _twist_handle(a2, b2, r3, l3)

    # both handles move to a frame centered on c2: [a1,b1] translates along the
    # imaginary axis toward ∞ and [a2,b2] toward 0, so [a1,b1][a2,b2] = 1
    first = _centered_on_boundary(_commutator(a1, b1), toward_infinity=True)
    second = _centered_on_boundary(_commutator(a2, b2), toward_infinity=False)
    a1, b1 = a1.conjugate_by(first), b1.conjugate_by(first)
    a2, b2 = a2.conjugate_by(second), b2.conjugate_by(second)

    viewer = axis(b1).p
    shear = left_shear(SEPARATING_AXIS, r2, viewer)
    sign2 = _full_twist_sign(left_shear(SEPARATING_AXIS, l2, viewer), _commutator(a1, b1))
    a2 = a2.conjugate_by(shear)
    b2 = b2.conjugate_by(shear)

    images = {"a1": a1, "b1": b1, "a2": a2, "b2": b2}
    residual = relator_residual(images, topo)
    tol = settings.EPS_REL if tolerance is None else tolerance
    logger.debug(f"holonomy built for {fn.lengths}/{fn.twists}: residual={residual:.3e}")
    if strict and not residual < tol:
        raise ConstructionError("relator residual exceeds tolerance", residual)
    marking = _marking((sign1 * k1, sign2 * k2, sign3 * k3))
    return FuchsianRep(topology=topo, images=images, relator_residual=residual, marking=marking)


def curve_length(rep: FuchsianRep, curve: CurveClass) -> float:
    try:
        return word_translation_length(rep.table, rep.pull_back(curve.word))
    except NonHyperbolicError as exc:
        raise NonHyperbolicError(f"curve {curve} not realized by a geodesic: {exc}") from exc


def marking_spectrum(rep: FuchsianRep, curves: Optional[Iterable[CurveClass]] = None) -> np.ndarray:
    curves = marking_set() if curves is None else list(curves)
    return np.array([curve_length(rep, c) for c in curves])


def _reduced_word_scan(rep: FuchsianRep, max_length: int) -> tuple[float, str]:
    """Shortest translation among nontrivial reduced words up to max_length (base images)."""
    letters = list(rep.table)
    mats = np.array([np.reshape(rep.table[x], (2, 2)) for x in letters])
    inverse_index = np.array([letters.index(x.swapcase()) for x in letters])

    layer = mats.copy()
    last = np.arange(len(letters))
    words = [[k] for k in range(len(letters))]
    best_value, best_word = math.inf, ""
    for length in range(1, max_length + 1):
        traces = np.abs(layer[:, 0, 0] + layer[:, 1, 1])
        lengths = 2.0 * np.arccosh(np.maximum(traces, 2.0) / 2.0)
        k = int(np.argmin(lengths))
        if lengths[k] < best_value:
            best_value = float(lengths[k])
            best_word = format_word(letters[j] for j in words[k])
        if length == max_length:
            break
        nxt, nxt_last, nxt_words = [], [], []
        for j in range(len(letters)):
            keep = last != inverse_index[j]
            nxt.append(layer[keep] @ mats[j])
            nxt_last.append(np.full(int(keep.sum()), j))
            nxt_words.extend(words[i] + [j] for i in np.flatnonzero(keep))
        layer = np.concatenate(nxt)
        last = np.concatenate(nxt_last)
        words = nxt_words
    return best_value, best_word


def validate_rep(rep: FuchsianRep, max_word_length: Optional[int] = None) -> SurfaceDiagnostics:
    max_word_length = max_word_length or settings.DISCRETENESS_WORD_LENGTH
    residual = relator_residual(dict(rep.images), rep.topology)
    pants_lengths = {}
    for curve in rep.topology.pants_curves():
        try:
            pants_lengths[curve.name] = curve_length(rep, curve)
        except NonHyperbolicError:
            pants_lengths[curve.name] = 0.0
    shortest, word = _reduced_word_scan(rep, max_word_length)
    diagnostics = SurfaceDiagnostics(
        relator_residual=residual,
        min_pants_length=min(pants_lengths.values()),
        max_pants_length=max(pants_lengths.values()),
        pants_lengths=pants_lengths,
        shortest_translation=shortest,
        shortest_word=word,
        systole_ok=shortest >= settings.EPS_SYS,
        residual_ok=residual < settings.EPS_REL,
    )
    level = logging.INFO if diagnostics.passed else logging.WARNING
    logger.log(level, f"validate_rep: residual={residual:.3e} systole={shortest:.6g} ({word})")
    return diagnostics


def load_surface_document(doc: dict) -> tuple[FenchelNielsen, PantsGraph]:
    """Parse the surface JSON document {genus, lengths, twists, curve_words}."""
    try:
        genus = int(doc.get("genus", 2))
        fn = FenchelNielsen(lengths=tuple(doc["lengths"]), twists=tuple(doc["twists"]))
        topo = PantsGraph.genus_two()
        if genus != 2:
            raise UnsupportedTopologyError(f"surface documents support genus 2 only, got {genus}")
        if "curve_words" in doc:
            topo = PantsGraph(
                genus=2, pants=topo.pants, edges=topo.edges, curve_words=doc["curve_words"]
            )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed surface document: {exc}") from exc
    except PydanticValidationError as exc:
        raise ValidationError(f"invalid surface document: {exc.errors()[0]['msg']}") from exc
    _check_topology(topo)
    return fn, topo
