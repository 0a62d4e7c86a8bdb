"""Subcommands: each takes a validated RunConfig and returns a process exit code.

Outputs go to `config.out`; logs never touch stdout, which carries only the JSON
summary of the run.
"""

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

from quakelab.core.config import RunConfig
from quakelab.core.errors import (
    BudgetExhaustedError,
    EscapingMinimumError,
    SolverError,
    ValidationError,
)
from quakelab.models.duality import OrientedPlane, PlanePairKind
from quakelab.models.geometry import MinkowskiVec
from quakelab.models.lamination import EnumerationBudget, MultiCurve
from quakelab.models.surface import (
    FenchelNielsen,
    PantsGraph,
    format_word,
    marking_set,
    symmetric_base,
)
from quakelab.models.teich import CurvatureParam
from quakelab.services.ds_duality import (
    classify_plane_pair,
    dual_segment_type,
    equidistant_curvatures,
    plane_dual,
    point_dual,
)
from quakelab.services.earthquake import asymptotic_slope, verify_length_estimate
from quakelab.services.laminations import IntersectionCache, lamination_intersection
from quakelab.services.moebius_core import apply_lorentz, random_lorentz
from quakelab.services.surface_holonomy import (
    curve_length,
    holonomy_from_fn,
    load_surface_document,
    validate_rep,
)
from quakelab.services.teich_solvers import (
    is_filling_heuristic,
    project_current,
    scaled_earthquake_metric,
    u_map,
    u_map_report,
    uniform_u_convergence_sweep,
)

logger = logging.getLogger(__name__)

LEMMA_COLUMNS = ["seed", "genus", "gamma", "support", "weights", "t", "i", "L0", "Lt", "lower", "upper", "pass"]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_BUDGET = 3
EXIT_SOLVER = 4


# ------------------------------------------------------------------ output helpers

def _num(value: Optional[float]) -> Optional[float]:
    """Plain float for JSON and CSV output; json and csv both write the shortest round-trip digits."""
    return None if value is None else float(value)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, payload: Any) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.info(f"wrote {path}")
    return _digest(path)


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.info(f"wrote {path}")
    return _digest(path)


def _emit_summary(out: Path, name: str, summary: dict, digests: dict[str, str]) -> None:
    summary = {**summary, "digests": dict(sorted(digests.items()))}
    _write_json(out / f"{name}.json", summary)
    print(json.dumps(summary, sort_keys=True, indent=2))


def _budget(config: RunConfig) -> EnumerationBudget:
    return EnumerationBudget(max_radius=config.budget_radius, window=config.budget_window)


def _base_surface(config: RunConfig) -> tuple[FenchelNielsen, PantsGraph]:
    if config.surface is None:
        return symmetric_base(), PantsGraph.genus_two()
    return load_surface_document(config.surface)


# ------------------------------------------------------------------ surface

def cmd_surface(config: RunConfig) -> int:
    if config.surface is None:
        raise ValidationError("surface command needs a 'surface' section in the config")
    fn, topology = load_surface_document(config.surface)
    rep = holonomy_from_fn(fn, topology, tolerance=config.tolerances.relator)
    diagnostics = validate_rep(rep)
    spectrum = {str(c): _num(curve_length(rep, c)) for c in marking_set()}
    summary = {
        "command": "surface",
        "lengths": [_num(x) for x in fn.lengths],
        "twists": [_num(x) for x in fn.twists],
        "relator_residual": _num(diagnostics.relator_residual),
        "pants_lengths": {k: _num(v) for k, v in diagnostics.pants_lengths.items()},
        "shortest_translation": _num(diagnostics.shortest_translation),
        "shortest_word": diagnostics.shortest_word,
        "marking_spectrum": spectrum,
        "valid": diagnostics.passed,
    }
    _emit_summary(Path(config.out), "surface", summary, {})
    return EXIT_OK if diagnostics.passed else EXIT_INVALID


# ------------------------------------------------------------------ verify-lemma

def _draw_jobs(config: RunConfig, rng: np.random.Generator, counts: dict, sign: int) -> list[dict]:
    suite = config.suite
    topology = PantsGraph.genus_two()
    pants = topology.pants_curves()
    simple_marking = [c for c in marking_set() if topology.curve_index(c) is None]
    jobs = []
    for index in range(suite.configs):
        seed = int(rng.integers(0, 2**63))
        local = np.random.default_rng(seed)
        lengths = local.uniform(*suite.lengths, size=3)
        twists = local.uniform(*suite.twists, size=3)
        if suite.support == "pants":
            mask = local.random(3) < 0.5
            if not mask.any():
                mask[local.integers(3)] = True
            curves = [c for c, keep in zip(pants, mask) if keep]
        else:
            curves = [simple_marking[int(local.integers(len(simple_marking)))]]
        weights = local.uniform(*suite.weights, size=len(curves))
        jobs.append(
            {
                "index": index,
                "seed": seed,
                "lengths": lengths.tolist(),
                "twists": twists.tolist(),
                "lamination": MultiCurve.from_pairs(zip(curves, weights)).to_json(),
                "grid": list(config.grid),
                "slack": config.slack,
                "budget": (config.budget_radius, config.budget_window),
                "sign": sign,
                "counts": counts,
                "asymptotic": index < suite.asymptotic_cases,
                "t_large": suite.t_large,
            }
        )
    return jobs


def _certify_job(job: dict) -> tuple[list[dict], Optional[dict]]:
    """Certificate rows for one random configuration against every marking curve."""
    base = FenchelNielsen(lengths=tuple(job["lengths"]), twists=tuple(job["twists"]))
    lamination = MultiCurve.from_json(job["lamination"])
    budget = EnumerationBudget(max_radius=job["budget"][0], window=job["budget"][1])
    cache = IntersectionCache(job["counts"])
    support = ";".join(format_word(c.word) for c in lamination.curves)
    weights = ";".join(repr(float(w)) for w in lamination.weights)
    common = {"seed": job["seed"], "genus": 2, "support": support, "weights": weights}

    rows = []
    for gamma in marking_set():
        try:
            cert = verify_length_estimate(
                base, lamination, gamma, job["grid"], job["slack"], budget=budget, cache=cache, sign=job["sign"]
            )
        except BudgetExhaustedError as exc:
            logger.warning(f"config {job['index']}, {gamma}: {exc}")
            for t in job["grid"]:
                rows.append({**common, "gamma": str(gamma), "t": _num(t), "i": "", "L0": "", "Lt": "",
                             "lower": "", "upper": "", "pass": "budget"})
            continue
        for row in cert.rows:
            rows.append(
                {
                    **common,
                    "gamma": str(gamma),
                    "t": _num(row.t),
                    "i": _num(cert.intersection),
                    "L0": _num(cert.base_length),
                    "Lt": _num(row.measured),
                    "lower": _num(row.lower),
                    "upper": _num(row.upper),
                    "pass": "true" if row.passed else "false",
                }
            )

    slope = None
    if job["asymptotic"]:
        gamma = marking_set()[job["seed"] % len(marking_set())]
        rep = holonomy_from_fn(base)
        t_large = job["t_large"]
        slope = {"seed": job["seed"], "gamma": str(gamma), "budget": False}
        try:
            i = lamination_intersection(rep, lamination, gamma, budget, cache)
        except BudgetExhaustedError as exc:
            logger.warning(f"config {job['index']}, slope of {gamma}: {exc}")
            return rows, {**slope, "budget": True, "pass": False}
        base_length = curve_length(rep, gamma)
        measured = asymptotic_slope(base, lamination, gamma, t_large, budget=budget)
        bound = base_length / t_large + job["slack"]
        slope.update(
            slope=_num(measured),
            i=_num(i),
            bound=_num(bound),
            **{"pass": abs(measured - job["sign"] * i) <= bound},
        )
    return rows, slope


def _prefill_counts(budget: EnumerationBudget) -> dict:
    """Marking-by-marking intersection table; counts are metric independent."""
    rep = holonomy_from_fn(symmetric_base())
    cache = IntersectionCache()
    curves = marking_set() + PantsGraph.genus_two().pants_curves()
    for k, gamma in enumerate(curves):
        for delta in curves[k:]:
            cache.get(rep, gamma, delta, budget)
    logger.info(f"prefilled {len(cache)} intersection counts")
    return cache.snapshot()


def _run_jobs(fn: Callable[[dict], Any], jobs: list[dict], workers: int) -> list[Any]:
    if workers <= 1:
        return [fn(job) for job in jobs]
    # map preserves job order, so output is independent of scheduling
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def cmd_verify_lemma(config: RunConfig) -> int:
    out = Path(config.out)
    rng = np.random.default_rng(config.seed)
    budget = _budget(config)
    sign = -1 if config.suite.wrong_sign else 1
    try:
        counts = _prefill_counts(budget)
    except BudgetExhaustedError as exc:
        logger.warning(f"intersection prefill incomplete, computing per row: {exc}")
        counts = {}
    jobs = _draw_jobs(config, rng, counts, sign)
    logger.info(f"certifying {len(jobs)} configurations on grid {config.grid} with {config.workers} worker(s)")
    results = _run_jobs(_certify_job, jobs, config.workers)

    rows = [row for job_rows, _ in results for row in job_rows]
    slopes = [slope for _, slope in results if slope is not None]
    passed = sum(row["pass"] == "true" for row in rows)
    failed = sum(row["pass"] == "false" for row in rows)
    exhausted = sum(row["pass"] == "budget" for row in rows) + sum(s["budget"] for s in slopes)
    slack_used = 0.0
    for row in rows:
        if row["pass"] != "budget":
            lt, lower, upper = float(row["Lt"]), float(row["lower"]), float(row["upper"])
            slack_used = max(slack_used, lower - lt, lt - upper)
    digests = {"lemma_rows.csv": _write_csv(out / "lemma_rows.csv", LEMMA_COLUMNS, rows)}
    summary = {
        "command": "verify-lemma",
        "seed": config.seed,
        "configs": len(jobs),
        "grid": [_num(t) for t in config.grid],
        "slack": _num(config.slack),
        "sign": sign,
        "rows": len(rows),
        "passed": passed,
        "failed": failed,
        "budget_exhausted": exhausted,
        "max_slack_used": _num(slack_used),
        "asymptotic": slopes,
        "asymptotic_failed": sum(not s["pass"] and not s["budget"] for s in slopes),
    }
    _emit_summary(out, "lemma_summary", summary, digests)
    if exhausted:
        return EXIT_BUDGET
    ok = failed == 0 and summary["asymptotic_failed"] == 0
    return EXIT_OK if ok else EXIT_INVALID


# ------------------------------------------------------------------ ukmap

def _random_pants_lamination(rng: np.random.Generator, weights: tuple[float, float]) -> MultiCurve:
    pants = PantsGraph.genus_two().pants_curves()
    values = rng.uniform(*weights, size=len(pants))
    keep = rng.random(len(pants)) < 0.7
    if not keep.any():
        keep[int(rng.integers(len(pants)))] = True
    return MultiCurve.from_pairs((c, w) for c, w, k in zip(pants, values, keep) if k)


def cmd_ukmap(config: RunConfig) -> int:
    out = Path(config.out)
    rng = np.random.default_rng(config.seed)
    budget = _budget(config)
    section = config.ukmap
    m0, _ = _base_surface(config)
    rep0 = holonomy_from_fn(m0)
    cache = IntersectionCache()
    curves = marking_set()
    pairs = [
        (_random_pants_lamination(rng, config.suite.weights), curves[int(rng.integers(len(curves)))])
        for _ in range(section.pairs)
    ]

    convergence = []
    bounds = []
    for value in section.curvatures:
        K = CurvatureParam(K=value)
        for lamination, gamma in pairs:
            h = scaled_earthquake_metric(K, m0, lamination)
            u = u_map(K, h, m0, tol=config.tolerances.invert)
            i_u = lamination_intersection(rep0, u, gamma, budget, cache)
            i_l = lamination_intersection(rep0, lamination, gamma, budget, cache)
            bound = curve_length(rep0, gamma) / K.scale
            convergence.append(
                {
                    "K": _num(value),
                    "gamma": str(gamma),
                    "lamination": lamination.to_json(),
                    "i_u": _num(i_u),
                    "i_l": _num(i_l),
                    "bound": _num(bound),
                    "pass": abs(i_u - i_l) <= bound + config.slack,
                }
            )
        bounds.append(max(curve_length(rep0, g) for _, g in pairs) / K.scale)
    monotone = all(b1 > b2 for b1, b2 in zip(bounds, bounds[1:]))

    reports = {}
    lamination, gamma = pairs[0]
    for value in section.curvatures:
        K = CurvatureParam(K=value)
        report = u_map_report(K, scaled_earthquake_metric(K, m0, lamination), m0, cache=cache)
        reports[repr(float(value))] = report.model_dump(mode="json")

    grid = np.linspace(0.0, 1.0, section.uniform_points).tolist()
    sweep = uniform_u_convergence_sweep(
        section.curvatures, m0, lamination.scaled, gamma, grid, config.slack, cache, budget
    )

    digests = {
        "ukmap_convergence.json": _write_json(out / "ukmap_convergence.json", convergence),
        "ukmap_reports.json": _write_json(out / "ukmap_reports.json", reports),
        "ukmap_uniform.json": _write_json(out / "ukmap_uniform.json", sweep.model_dump(mode="json")),
    }
    failed = sum(not row["pass"] for row in convergence)
    estimate_failed = sum(
        not row["passed"] for report in reports.values() for row in report["inverse_estimate"]
    )
    summary = {
        "command": "ukmap",
        "seed": config.seed,
        "curvatures": [_num(k) for k in section.curvatures],
        "pairs": section.pairs,
        "failed": failed,
        "bounds": [_num(b) for b in bounds],
        "bounds_decreasing": monotone,
        "uniform_passed": sweep.passed,
        "inverse_estimate_failed": estimate_failed,
    }
    _emit_summary(out, "ukmap_summary", summary, digests)
    ok = failed == 0 and monotone and sweep.passed and estimate_failed == 0
    return EXIT_OK if ok else EXIT_INVALID


# ------------------------------------------------------------------ project

def cmd_project(config: RunConfig) -> int:
    out = Path(config.out)
    rng = np.random.default_rng(config.seed)
    section = config.project
    budget = _budget(config)
    if section.mu:
        mu = MultiCurve.from_json(section.mu)
    else:
        mu = MultiCurve.from_pairs((c, 1.0) for c in marking_set())
    omega = MultiCurve.from_json(section.omega) if section.omega else MultiCurve()
    current = mu + omega
    if not is_filling_heuristic(current, budget=budget):
        raise EscapingMinimumError(f"non-filling current: {current.describe()} misses a marking curve")

    base = symmetric_base()
    starts = [base] + [
        FenchelNielsen(
            lengths=tuple(rng.uniform(1.0, 2.5, size=3)),
            twists=tuple(rng.uniform(-0.5, 0.5, size=3)),
        )
        for _ in range(section.starts - 1)
    ]
    tol = config.tolerances.project
    solutions = []
    reports = []
    for start in starts:
        fn, report = project_current(mu, omega, start, tol)
        if not report.converged:
            raise SolverError(f"projection did not converge: {report.message}")
        solutions.append(fn.as_vector())
        reports.append(report.model_dump(mode="json"))
    solutions = np.array(solutions)
    spread = float(np.max(np.abs(solutions - solutions[0])))

    doubled, _ = project_current(mu.scaled(2.0), omega.scaled(2.0), base, tol)
    scale_gap = float(np.max(np.abs(doubled.as_vector() - solutions[0])))

    minimizer = FenchelNielsen.from_vector(solutions[0])
    payload = {
        "minimizer": {"lengths": [_num(x) for x in minimizer.lengths], "twists": [_num(x) for x in minimizer.twists]},
        "reports": reports,
    }
    digests = {"projection.json": _write_json(out / "projection.json", payload)}
    summary = {
        "command": "project",
        "seed": config.seed,
        "current": current.to_json(),
        "starts": len(starts),
        "multistart_spread": _num(spread),
        "scale_gap": _num(scale_gap),
        "agree": spread < 1e-5 and scale_gap < 1e-6,
    }
    _emit_summary(out, "project_summary", summary, digests)
    return EXIT_OK if summary["agree"] else EXIT_SOLVER


# ------------------------------------------------------------------ duality

def _plane_pair_case(rng: np.random.Generator) -> tuple[OrientedPlane, OrientedPlane, PlanePairKind, float]:
    """A canonical plane pair with known relation, moved by a random Lorentz transform."""
    first = MinkowskiVec(0.0, 1.0, 0.0, 0.0)
    kind = [PlanePairKind.INTERSECTING, PlanePairKind.DISJOINT, PlanePairKind.ASYMPTOTIC][int(rng.integers(3))]
    if kind is PlanePairKind.INTERSECTING:
        value = float(rng.uniform(0.05, math.pi - 0.05))
        second = MinkowskiVec(0.0, math.cos(value), math.sin(value), 0.0)
    elif kind is PlanePairKind.DISJOINT:
        value = float(rng.uniform(0.05, 3.0))
        second = MinkowskiVec(math.sinh(value), math.cosh(value), 0.0, 0.0)
    else:
        value = 0.0
        second = MinkowskiVec(1.0, 1.0, 1.0, 0.0)
    if rng.random() < 0.5:
        second = -second
        if kind is PlanePairKind.INTERSECTING:
            value = math.pi - value
    transform = random_lorentz(rng)
    return (
        OrientedPlane(n=apply_lorentz(transform, first)),
        OrientedPlane(n=apply_lorentz(transform, second)),
        kind,
        value,
    )


def cmd_duality(config: RunConfig) -> int:
    out = Path(config.out)
    rng = np.random.default_rng(config.seed)
    rows = []
    for index in range(config.duality.pairs):
        first, second, kind, value = _plane_pair_case(rng)
        relation = classify_plane_pair(first, second)
        segment = dual_segment_type(plane_dual(first), plane_dual(second))
        measured = relation.angle if kind is PlanePairKind.INTERSECTING else relation.distance
        error = abs(measured - value) if measured is not None else math.inf
        segment_error = abs(segment.length - measured) if measured is not None and segment.length is not None else math.inf
        involution = max(
            float(np.max(np.abs(point_dual(plane_dual(p)).n.as_array() - p.n.as_array()))) for p in (first, second)
        )
        rows.append(
            {
                "index": index,
                "expected": kind.value,
                "kind": relation.kind.value,
                "value": _num(value),
                "measured": _num(measured),
                "error": _num(error),
                "segment": segment.kind.value,
                "segment_error": _num(segment_error),
                "involution": _num(involution),
                "pass": relation.kind is kind and error <= 1e-9 and segment_error <= 1e-9 and involution <= 1e-12,
            }
        )

    curvature_rows = []
    for d in np.linspace(0.05, 5.0, 50):
        K, k_iii = equidistant_curvatures(float(d))
        gap = abs(k_iii - K / (K + 1.0))
        curvature_rows.append(
            {"d": _num(d), "K": _num(K), "K_III": _num(k_iii), "gap": _num(gap),
             "pass": gap <= 1e-12 * max(1.0, abs(k_iii))}
        )

    digests = {
        "duality_pairs.json": _write_json(out / "duality_pairs.json", rows),
        "duality_curvature.json": _write_json(out / "duality_curvature.json", curvature_rows),
    }
    failed = sum(not r["pass"] for r in rows)
    curvature_failed = sum(not r["pass"] for r in curvature_rows)
    summary = {
        "command": "duality",
        "seed": config.seed,
        "pairs": len(rows),
        "failed": failed,
        "curvature_failed": curvature_failed,
    }
    _emit_summary(out, "duality_summary", summary, digests)
    return EXIT_OK if failed == 0 and curvature_failed == 0 else EXIT_INVALID


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "surface": cmd_surface,
    "verify-lemma": cmd_verify_lemma,
    "ukmap": cmd_ukmap,
    "project": cmd_project,
    "duality": cmd_duality,
}
