"""Left earthquakes along weighted multicurves and the length-estimate certificate."""

import logging
from typing import Optional, Sequence

from quakelab.core.config import settings
from quakelab.core.errors import ConstructionError, UnsupportedFastPathError, ValidationError
from quakelab.models.earthquake import (
    CertificateRow,
    EarthquakeMethod,
    EarthquakePath,
    LemmaCertificate,
)
from quakelab.models.geometry import BoundaryPoint, Isometry2
from quakelab.models.lamination import EnumerationBudget, MultiCurve
from quakelab.models.surface import CurveClass, FenchelNielsen, FuchsianRep, PantsGraph
from quakelab.services.laminations import IntersectionCache, lamination_intersection, path_crossings
from quakelab.services.moebius_core import left_shear
from quakelab.services.surface_holonomy import curve_length, holonomy_from_fn, relator_residual

logger = logging.getLogger(__name__)

# generic base points for generator paths, tried in order
_BASE_POINTS = (0.1372 + 1.0931j, -0.3114 + 0.8713j, 0.0517 + 1.4127j, 0.4421 + 0.6358j)


def _signed_amount(path: EarthquakePath) -> float:
    return path.t if path.direction == "left" else -path.t


def _pants_indices(topology: PantsGraph, lamination: MultiCurve) -> Optional[list[int]]:
    indices = [topology.curve_index(c) for c in lamination.curves]
    return None if any(k is None for k in indices) else indices


def resolve_method(path: EarthquakePath) -> EarthquakeMethod:
    if path.method is not None:
        return path.method
    if _pants_indices(path.topology, path.lamination) is not None:
        return EarthquakeMethod.FN_TWIST
    return EarthquakeMethod.HOLONOMY_INSERT


def earthquake_fn(path: EarthquakePath) -> FenchelNielsen:
    """Fenchel-Nielsen point reached by an earthquake on pants-curve support."""
    indices = _pants_indices(path.topology, path.lamination)
    if indices is None:
        raise UnsupportedFastPathError(
            f"unsupported fast path: {path.lamination.describe()} is not on pants curves"
        )
    twists = list(path.base.twists)
    amount = _signed_amount(path)
    for k, weight in zip(indices, path.lamination.weights):
        twists[k] += amount * weight
    return path.base.with_twists(twists)


def insert_earthquake(
    rep: FuchsianRep,
    lamination: MultiCurve,
    amount: float,
    budget: Optional[EnumerationBudget] = None,
) -> FuchsianRep:
    """Earthquake by cocycle insertion on the generator paths of rep.

    Each generator image ρ(s) becomes S_1⋯S_n ρ(s), where S_k is the left shear by
    amount·w_k along the k-th lift crossed by the segment from x0 to ρ(s)x0.
    """
    images = rep.generator_images()
    flat = FuchsianRep(topology=rep.topology, images=images, relator_residual=rep.relator_residual)
    if lamination.is_empty or amount == 0.0:
        return flat
    weights = lamination.weights
    origin = BoundaryPoint(0.0)
    last_error: Optional[Exception] = None
    for x0 in _BASE_POINTS:
        try:
            shifted = {}
            for name, g in images.items():
                frame, crossings = path_crossings(flat, x0, g(x0), lamination, budget)
                product = Isometry2.identity()
                for crossing in crossings:
                    shear = left_shear(crossing.line, amount * weights[crossing.component], origin)
                    product = product.compose(shear)
                frame_iso = Isometry2.from_matrix(frame)
                cocycle = frame_iso.inverse().compose(product).compose(frame_iso)
                shifted[name] = cocycle.compose(g)
                logger.debug(f"generator {name}: {len(crossings)} crossings")
            break
        except ValidationError as exc:
            last_error = exc
            logger.debug(f"base point {x0} rejected: {exc}")
    else:
        raise ValidationError(f"no generic base point found: {last_error}")

    residual = relator_residual(shifted, rep.topology)
    if not residual < settings.EPS_EARTHQUAKE_REL:
        raise ConstructionError("earthquake relator residual exceeds tolerance", residual)
    return FuchsianRep(topology=rep.topology, images=shifted, relator_residual=residual)


def earthquake(path: EarthquakePath, budget: Optional[EnumerationBudget] = None) -> FuchsianRep:
    method = resolve_method(path)
    if method is EarthquakeMethod.FN_TWIST:
        return holonomy_from_fn(earthquake_fn(path), path.topology)
    base = holonomy_from_fn(path.base, path.topology)
    return insert_earthquake(base, path.lamination, _signed_amount(path), budget)


def verify_length_estimate(
    base: FenchelNielsen,
    lamination: MultiCurve,
    gamma: CurveClass,
    t_grid: Sequence[float],
    slack: float,
    topology: Optional[PantsGraph] = None,
    method: Optional[EarthquakeMethod] = None,
    budget: Optional[EnumerationBudget] = None,
    cache: Optional[IntersectionCache] = None,
    sign: int = 1,
) -> LemmaCertificate:
    """Certify i·t - L0 <= L_t <= i·t + L0 on a grid of earthquake scales.

    `sign=-1` flips the expected slope and serves as a negative control.
    """
    if not t_grid:
        raise ValidationError("t grid must not be empty")
    if any(t < 0 for t in t_grid):
        raise ValidationError(f"earthquake scales must be nonnegative, got {min(t_grid)}")
    topology = topology or PantsGraph.genus_two()
    base_rep = holonomy_from_fn(base, topology)
    i = lamination_intersection(base_rep, lamination, gamma, budget, cache)
    base_length = curve_length(base_rep, gamma)
    path = EarthquakePath(base=base, topology=topology, lamination=lamination, t=0.0, method=method)

    rows = []
    used = 0.0
    for t in t_grid:
        measured = curve_length(earthquake(path.at(t), budget), gamma)
        expected = sign * i * t
        lower, upper = expected - base_length, expected + base_length
        excess = max(0.0, lower - measured, measured - upper)
        used = max(used, excess)
        rows.append(
            CertificateRow(t=t, lower=lower, measured=measured, upper=upper, passed=excess <= slack)
        )
    cert = LemmaCertificate(
        curve=str(gamma),
        lamination=lamination.to_json(),
        intersection=i,
        base_length=base_length,
        slack=slack,
        rows=rows,
        passed=all(row.passed for row in rows),
        slack_used=used,
    )
    if not cert.passed:
        logger.warning(f"estimate fails for {gamma} along {lamination.describe()}: excess {used:.3e}")
    return cert


def asymptotic_slope(
    base: FenchelNielsen,
    lamination: MultiCurve,
    gamma: CurveClass,
    t_large: float,
    topology: Optional[PantsGraph] = None,
    budget: Optional[EnumerationBudget] = None,
) -> float:
    if not t_large > 0:
        raise ValidationError(f"t_large must be positive, got {t_large}")
    path = EarthquakePath(
        base=base, topology=topology or PantsGraph.genus_two(), lamination=lamination, t=t_large
    )
    return curve_length(earthquake(path, budget), gamma) / t_large


def compose_paths(first: EarthquakePath, second: EarthquakePath) -> EarthquakePath:
    """Flow property: E^{t2} after E^{t1} along the same lamination is E^{t1+t2} from first.base.

    Only the lamination, direction and topology of `second` are used; its base is
    understood to be the endpoint of `first`.
    """
    if first.lamination != second.lamination:
        raise ValidationError("paths follow different laminations")
    if first.direction != second.direction or first.topology != second.topology:
        raise ValidationError("paths differ in direction or topology")
    return first.at(first.t + second.t)
