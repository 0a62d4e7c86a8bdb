"""Inverse earthquakes, the rescaling map u_K, and the intersection-minimizing projection."""

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from quakelab.core.config import settings
from quakelab.core.errors import (
    ConditioningError,
    ConstructionError,
    EscapingMinimumError,
    NotLeftEarthquakeImageError,
    SolverError,
    UnsupportedFastPathError,
    ValidationError,
)
from quakelab.models.earthquake import EarthquakePath
from quakelab.models.lamination import EnumerationBudget, MultiCurve
from quakelab.models.surface import (
    CurveClass,
    FenchelNielsen,
    PantsGraph,
    marking_set,
    symmetric_base,
)
from quakelab.models.teich import (
    CurvatureParam,
    InverseEstimateRow,
    ScaledMetric,
    SolveReport,
    UMapReport,
    UniformSweepReport,
    UniformSweepRow,
)
from quakelab.services.earthquake import earthquake_fn
from quakelab.services.laminations import IntersectionCache, lamination_intersection
from quakelab.services.surface_holonomy import curve_length, holonomy_from_fn, marking_spectrum

logger = logging.getLogger(__name__)

# recovered weights within these bands are treated as exact zeros
ZERO_WEIGHT = 1e-8
NEGATIVE_WEIGHT = 1e-8


def _fd_jacobian(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float) -> np.ndarray:
    cols = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = step
        cols.append((fn(x + e) - fn(x - e)) / (2.0 * step))
    return np.column_stack(cols)


def _fd_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray, step: float) -> np.ndarray:
    grad = np.empty_like(x)
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = step
        grad[k] = (fn(x + e) - fn(x - e)) / (2.0 * step)
    return grad


def _levenberg_marquardt(
    residual_fn: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    tol: float,
    max_iter: int,
    step: float,
) -> tuple[np.ndarray, np.ndarray, int, float, bool]:
    x = np.array(x0, dtype=float)
    r = residual_fn(x)
    cost = float(r @ r)
    damping = 1e-3
    condition = 1.0
    for iteration in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return x, r, iteration, condition, True
        jac = _fd_jacobian(residual_fn, x, step)
        condition = float(np.linalg.cond(jac))
        if condition > settings.CONDITION_MAX:
            raise ConditioningError("singular Jacobian in inverse earthquake", condition)
        normal = jac.T @ jac
        grad = jac.T @ r
        scaling = np.diag(np.diag(normal) + 1e-12)
        for _ in range(30):
            delta = np.linalg.solve(normal + damping * scaling, -grad)
            trial = x + delta
            r_trial = residual_fn(trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial < cost:
                x, r, cost = trial, r_trial, cost_trial
                damping = max(damping / 10.0, 1e-15)
                break
            damping *= 10.0
        else:
            return x, r, iteration + 1, condition, bool(np.max(np.abs(r)) < tol)
    return x, r, max_iter, condition, bool(np.max(np.abs(r)) < tol)


def _support_indices(topology: PantsGraph, support: Sequence[CurveClass]) -> list[int]:
    indices = [topology.curve_index(c) for c in support]
    if any(k is None for k in indices):
        raise UnsupportedFastPathError("inverse earthquakes are restricted to pants-curve support")
    return indices


def twisted_spectrum(
    m0: FenchelNielsen,
    indices: Sequence[int],
    weights: Sequence[float],
    curves: Sequence[CurveClass],
    topology: Optional[PantsGraph] = None,
) -> np.ndarray:
    """Marking spectrum of the earthquake of m0 by Σ w_k c_k at scale 1 (signed weights)."""
    twists = list(m0.twists)
    for k, w in zip(indices, weights):
        twists[k] += w
    return marking_spectrum(holonomy_from_fn(m0.with_twists(twists), topology), curves)


def invert_earthquake(
    m0: FenchelNielsen,
    target: Sequence[float],
    support: Optional[Sequence[CurveClass]] = None,
    tol: Optional[float] = None,
    curves: Optional[Sequence[CurveClass]] = None,
    topology: Optional[PantsGraph] = None,
    max_iter: Optional[int] = None,
    restarts: Optional[int] = None,
    seed: int = 0,
) -> tuple[np.ndarray, SolveReport]:
    """Signed weights w on the support whose earthquake of m0 matches `target`."""
    topology = topology or PantsGraph.genus_two()
    support = list(support) if support is not None else topology.pants_curves()
    curves = list(curves) if curves is not None else marking_set()
    tol = tol or settings.INVERT_TOL
    max_iter = max_iter or settings.INVERT_MAX_ITER
    restarts = settings.INVERT_RESTARTS if restarts is None else restarts
    indices = _support_indices(topology, support)
    target = np.asarray(target, dtype=float)
    if target.shape != (len(curves),):
        raise ValidationError(f"target spectrum has shape {target.shape}, expected ({len(curves)},)")

    def residual(w: np.ndarray) -> np.ndarray:
        return twisted_spectrum(m0, indices, w, curves, topology) - target

    rng = np.random.default_rng(seed)
    spread = max(3.0, float(np.max(target)))
    starts = [np.zeros(len(indices))] + [rng.uniform(-spread, spread, len(indices)) for _ in range(restarts)]
    best = None
    total_iterations = 0
    for n, start in enumerate(starts, 1):
        x, r, iterations, condition, converged = _levenberg_marquardt(
            residual, start, tol, max_iter, settings.FD_STEP
        )
        total_iterations += iterations
        floor = float(np.max(np.abs(r)))
        if best is None or floor < best[1]:
            best = (x, floor, condition)
        if converged:
            break
        logger.debug(f"inverse earthquake start {n} stalled at residual {floor:.3e}")
    x, floor, condition = best
    converged = floor < tol
    report = SolveReport(
        converged=converged,
        iterations=total_iterations,
        residual=floor,
        tolerance=tol,
        condition=condition,
        solution=x.tolist(),
        starts_tried=n,
        message="" if converged else "target outside the twist family or solver stalled",
    )
    if converged:
        logger.info(f"inverse earthquake converged: w={np.round(x, 10).tolist()} residual={floor:.3e}")
    else:
        logger.warning(f"inverse earthquake did not converge: residual floor {floor:.3e}")
    return x, report


def _check_curvature(K: CurvatureParam, h: ScaledMetric) -> None:
    if abs(h.curvature - K.k_star) > 1e-12 * max(1.0, abs(K.k_star)):
        raise ValidationError(f"metric curvature {h.curvature!r} differs from K*={K.k_star!r}")


def _solve_u_map(
    K: CurvatureParam,
    h: ScaledMetric,
    m0: FenchelNielsen,
    support: Optional[Sequence[CurveClass]],
    tol: Optional[float],
) -> tuple[MultiCurve, np.ndarray, SolveReport, list[CurveClass]]:
    _check_curvature(K, h)
    topology = PantsGraph.genus_two()
    support = list(support) if support is not None else topology.pants_curves()
    target = marking_spectrum(holonomy_from_fn(h.shape, topology))
    weights, report = invert_earthquake(m0, target, support, tol)
    if not report.converged:
        raise SolverError(f"inverse earthquake did not converge (residual {report.residual:.3e})")
    if np.any(weights < -NEGATIVE_WEIGHT):
        raise NotLeftEarthquakeImageError(
            f"not a left-earthquake image: recovered weights {weights.tolist()}", weights
        )
    factor = 1.0 / K.scale
    lamination = MultiCurve.from_pairs(
        (curve, w * factor) for curve, w in zip(support, weights) if w > ZERO_WEIGHT
    )
    return lamination, weights, report, support


def u_map(
    K: CurvatureParam,
    h: ScaledMetric,
    m0: FenchelNielsen,
    support: Optional[Sequence[CurveClass]] = None,
    tol: Optional[float] = None,
) -> MultiCurve:
    """u_K(h) = (1/√|K*|)·E^{-1}(|K*|·h), on the pants-curve earthquake family of m0."""
    lamination, _, _, _ = _solve_u_map(K, h, m0, support, tol)
    return lamination


def inverse_estimate_rows(
    m: FenchelNielsen,
    m0: FenchelNielsen,
    lamination: MultiCurve,
    curves: Optional[Sequence[CurveClass]] = None,
    cache: Optional[IntersectionCache] = None,
    slack: float = 1e-6,
) -> list[InverseEstimateRow]:
    """L_m(c) - L_m0(c) <= i(l, c) <= L_m(c) + L_m0(c) for l with E^{m0}(l) = m."""
    curves = list(curves) if curves is not None else marking_set()
    rep0 = holonomy_from_fn(m0)
    rep = holonomy_from_fn(m)
    rows = []
    for curve in curves:
        length, base = curve_length(rep, curve), curve_length(rep0, curve)
        i = lamination_intersection(rep0, lamination, curve, cache=cache)
        lower, upper = length - base, length + base
        rows.append(
            InverseEstimateRow(
                curve=str(curve),
                lower=lower,
                intersection=i,
                upper=upper,
                passed=lower - slack <= i <= upper + slack,
            )
        )
    return rows


def u_map_report(
    K: CurvatureParam,
    h: ScaledMetric,
    m0: FenchelNielsen,
    support: Optional[Sequence[CurveClass]] = None,
    tol: Optional[float] = None,
    cache: Optional[IntersectionCache] = None,
) -> UMapReport:
    lamination, weights, report, support = _solve_u_map(K, h, m0, support, tol)
    recovered = MultiCurve.from_pairs((c, w) for c, w in zip(support, weights) if w > ZERO_WEIGHT)
    return UMapReport(
        K=K.K,
        k_star=K.k_star,
        weights=(weights / K.scale).tolist(),
        lamination=lamination.to_json(),
        solve=report,
        inverse_estimate=inverse_estimate_rows(h.shape, m0, recovered, cache=cache),
    )


def scaled_earthquake_metric(K: CurvatureParam, m0: FenchelNielsen, lamination: MultiCurve) -> ScaledMetric:
    """h = (1/|K*|)·E^{m0}(√|K*|·l), whose lengths approach i(l, ·) as K → -1."""
    path = EarthquakePath(base=m0, lamination=lamination.scaled(K.scale), t=1.0)
    return ScaledMetric(shape=earthquake_fn(path), curvature=K.k_star)


def uniform_u_convergence_sweep(
    K_list: Sequence[float],
    m0: FenchelNielsen,
    family: Callable[[float], MultiCurve],
    gamma: CurveClass,
    t_grid: Sequence[float],
    slack: float = 1e-6,
    cache: Optional[IntersectionCache] = None,
    budget: Optional[EnumerationBudget] = None,
) -> UniformSweepReport:
    """Check |L_{h_K(t)}(γ) - i(u_K(h_K(t)), γ)| <= L_{m0}(γ)/√|K*| over a t grid."""
    if not t_grid:
        raise ValidationError("t grid must not be empty")
    cache = cache or IntersectionCache()
    rep0 = holonomy_from_fn(m0)
    base_length = curve_length(rep0, gamma)
    rows: list[UniformSweepRow] = []
    max_dev: dict[str, float] = {}
    bounds: dict[str, float] = {}
    for value in K_list:
        K = CurvatureParam(K=value)
        bound = base_length / K.scale
        bounds[repr(value)] = bound
        worst = 0.0
        for t in t_grid:
            lamination = family(t)
            h = scaled_earthquake_metric(K, m0, lamination)
            u = u_map(K, h, m0)
            length_h = curve_length(holonomy_from_fn(h.shape), gamma) * h.length_factor()
            i_u = lamination_intersection(rep0, u, gamma, budget, cache)
            deviation = abs(length_h - i_u)
            worst = max(worst, deviation)
            rows.append(
                UniformSweepRow(
                    K=value,
                    t=t,
                    curve=str(gamma),
                    length_h=length_h,
                    intersection_u=i_u,
                    deviation=deviation,
                    bound=bound,
                    passed=deviation <= bound + slack,
                )
            )
        max_dev[repr(value)] = worst
        logger.info(f"K={value}: max deviation {worst:.6g} against bound {bound:.6g}")
    return UniformSweepReport(
        rows=rows, max_deviation=max_dev, bounds=bounds, passed=all(r.passed for r in rows)
    )


# ------------------------------------------------------------------ projection

def is_filling_heuristic(
    mu: MultiCurve,
    probes: Optional[Sequence[CurveClass]] = None,
    rep=None,
    budget: Optional[EnumerationBudget] = None,
    cache: Optional[IntersectionCache] = None,
) -> bool:
    """Necessary condition for filling: every probe curve meets mu. Not sufficient."""
    probes = list(probes) if probes is not None else marking_set()
    if not probes:
        raise ValidationError("probe set must be nonempty")
    rep = rep or holonomy_from_fn(symmetric_base())
    cache = cache or IntersectionCache()
    for probe in probes:
        if not any(cache.get(rep, probe, curve, budget) > 0 for curve in mu.curves):
            logger.info(f"probe {probe} misses {mu.describe()}")
            return False
    return True


def _weighted_length(curves: Sequence[CurveClass], weights: np.ndarray) -> Callable[[np.ndarray], float]:
    lo = math.log(settings.LENGTH_MIN) - 7.0
    hi = math.log(settings.LENGTH_MAX) + 1.5

    def objective(x: np.ndarray) -> float:
        n = len(x) // 2
        if np.any(x[:n] < lo) or np.any(x[:n] > hi):
            raise EscapingMinimumError(f"non-filling or escaping minimum: log-lengths {x[:n].tolist()}")
        try:
            rep = holonomy_from_fn(FenchelNielsen.from_vector(x), strict=False)
            return float(sum(w * curve_length(rep, c) for c, w in zip(curves, weights)))
        except (ConstructionError, ValidationError) as exc:
            raise EscapingMinimumError(f"non-filling or escaping minimum: surface degenerates ({exc})") from exc

    return objective


def project_current(
    mu: MultiCurve,
    omega: Optional[MultiCurve] = None,
    start: Optional[FenchelNielsen] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> tuple[FenchelNielsen, SolveReport]:
    """argmin over Fenchel-Nielsen space of Σ w_k L_m(c_k) for the current mu + omega.

    The objective is divided by the total weight, so the result depends on the
    current only up to scale.
    """
    current = mu + (omega or MultiCurve())
    if current.is_empty:
        raise ValidationError("cannot project the zero current")
    tol = tol or settings.PROJECT_TOL
    max_iter = max_iter or settings.PROJECT_MAX_ITER
    start = start or symmetric_base()
    weights = np.array(current.weights)
    weights = weights / weights.sum()
    objective = _weighted_length(current.curves, weights)
    step = settings.FD_STEP

    def gradient(x: np.ndarray) -> np.ndarray:
        return _fd_gradient(objective, x, step)

    n = len(start.lengths)
    log_min, log_max = math.log(settings.LENGTH_MIN), math.log(settings.LENGTH_MAX)

    def check_bounds(xk: np.ndarray) -> None:
        if np.any(xk[:n] < log_min) or np.any(xk[:n] > log_max):
            raise EscapingMinimumError(
                f"non-filling or escaping minimum: lengths {np.exp(xk[:n]).tolist()} left "
                f"[{settings.LENGTH_MIN}, {settings.LENGTH_MAX}]"
            )

    result = minimize(
        objective,
        start.as_vector(),
        jac=gradient,
        method="BFGS",
        callback=check_bounds,
        options={"gtol": tol * 1e-2, "maxiter": max_iter, "norm": np.inf},
    )
    x = result.x
    check_bounds(x)
    grad_norm = float(np.max(np.abs(gradient(x))))
    hessian = _fd_jacobian(gradient, x, 1e-4)
    hessian = (hessian + hessian.T) / 2.0
    eigenvalues = np.linalg.eigvalsh(hessian)
    positive = bool(eigenvalues[0] > 0)
    converged = grad_norm < tol and positive
    message = "" if converged else (result.message if positive else "Hessian estimate not positive definite")
    report = SolveReport(
        converged=converged,
        iterations=int(result.nit),
        residual=grad_norm,
        tolerance=tol,
        condition=float(eigenvalues[-1] / eigenvalues[0]) if positive else None,
        solution=x.tolist(),
        message=str(message),
    )
    level = logging.INFO if converged else logging.WARNING
    logger.log(level, f"projection: |grad|={grad_norm:.3e} after {result.nit} iterations")
    return FenchelNielsen.from_vector(x), report
