import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from quakelab.core.errors import (
    EscapingMinimumError,
    NotLeftEarthquakeImageError,
    UnsupportedFastPathError,
    ValidationError,
)
from quakelab.models.lamination import MultiCurve
from quakelab.models.surface import CurveClass, FenchelNielsen, marking_set
from quakelab.models.teich import CurvatureParam, ScaledMetric
from quakelab.services.teich_solvers import (
    invert_earthquake,
    is_filling_heuristic,
    project_current,
    scaled_earthquake_metric,
    twisted_spectrum,
    u_map,
    u_map_report,
    uniform_u_convergence_sweep,
)
from quakelab.services.surface_holonomy import curve_length, holonomy_from_fn, marking_spectrum
from tests.helpers import random_fn

C = CurveClass.parse


def _total_length(mu: MultiCurve, fn: FenchelNielsen) -> float:
    rep = holonomy_from_fn(fn, strict=False)
    return sum(w * curve_length(rep, c) for c, w in zip(mu.curves, mu.weights))


class TestCurvatureParam:
    def test_third_form_curvature(self):
        K = CurvatureParam(K=-0.5)
        assert K.k_star == -1.0
        assert K.scale == 1.0

    @pytest.mark.parametrize("value", [-1.0, 0.0, -1.5, 0.3])
    def test_range(self, value):
        with pytest.raises(PydanticValidationError):
            CurvatureParam(K=value)


class TestInverseEarthquake:
    def test_unmoved_target(self, base, base_rep):
        weights, report = invert_earthquake(base, marking_spectrum(base_rep))
        assert report.converged
        assert report.iterations == 0
        np.testing.assert_allclose(weights, 0.0, atol=1e-12)

    def test_recovers_weights(self, base):
        expected = np.array([0.4, 0.8, 1.1])
        target = twisted_spectrum(base, [0, 1, 2], expected, marking_set())
        weights, report = invert_earthquake(base, target)
        assert report.converged
        assert report.residual < report.tolerance
        np.testing.assert_allclose(weights, expected, atol=1e-6)

    def test_negative_weights_are_found_too(self, base):
        target = twisted_spectrum(base, [0, 2], [-0.7, 0.3], marking_set())
        weights, _ = invert_earthquake(base, target, support=[C("b1"), C("b2")])
        np.testing.assert_allclose(weights, [-0.7, 0.3], atol=1e-6)

    @pytest.mark.slow
    def test_seeded_round_trips(self, rng):
        for _ in range(30):
            m0 = random_fn(rng, lengths=(0.8, 2.5))
            expected = rng.uniform(0.0, 2.0, size=3)
            target = twisted_spectrum(m0, [0, 1, 2], expected, marking_set())
            weights, report = invert_earthquake(m0, target)
            assert report.converged
            np.testing.assert_allclose(weights, expected, atol=1e-6)

    def test_target_outside_twist_family(self, base):
        other = holonomy_from_fn(FenchelNielsen(lengths=(1.1, 1.5, 1.5), twists=(0.0, 0.0, 0.0)))
        _, report = invert_earthquake(base, marking_spectrum(other), restarts=1)
        assert not report.converged
        assert report.residual > 1e-3
        assert report.message

    def test_support_must_be_pants_curves(self, base, base_rep):
        with pytest.raises(UnsupportedFastPathError):
            invert_earthquake(base, marking_spectrum(base_rep), support=[C("a1")])

    def test_target_shape(self, base):
        with pytest.raises(ValidationError, match="shape"):
            invert_earthquake(base, [1.0, 2.0])


class TestUMap:
    def test_zero_lamination(self, base):
        K = CurvatureParam(K=-0.3)
        h = scaled_earthquake_metric(K, base, MultiCurve())
        assert u_map(K, h, base).is_empty

    @pytest.mark.parametrize("value", [-0.3, -0.5, -0.9])
    def test_recovers_lamination(self, base, value):
        K = CurvatureParam(K=value)
        lamination = MultiCurve.from_pairs([("b1", 0.7), ("b2", 1.2)])
        u = u_map(K, scaled_earthquake_metric(K, base, lamination), base)
        assert [c.word for c in u.curves] == [("b1",), ("b2",)]
        np.testing.assert_allclose(u.weights, [0.7, 1.2], atol=1e-6)

    def test_doubling_the_lamination_doubles_the_weights(self, base):
        K = CurvatureParam(K=-0.5)
        lamination = MultiCurve.from_pairs([("b1", 0.4), ("b2", 0.9)])
        once = u_map(K, scaled_earthquake_metric(K, base, lamination), base)
        twice = u_map(K, scaled_earthquake_metric(K, base, lamination.scaled(2.0)), base)
        assert [c.word for c in twice.curves] == [c.word for c in once.curves]
        np.testing.assert_allclose(twice.weights, 2.0 * np.array(once.weights), atol=1e-6)

    def test_curvature_must_match(self, base):
        K = CurvatureParam(K=-0.3)
        h = ScaledMetric(shape=base, curvature=-2.0)
        with pytest.raises(ValidationError, match="curvature"):
            u_map(K, h, base)

    def test_backwards_twist_is_not_a_left_image(self, base):
        K = CurvatureParam(K=-0.5)
        h = ScaledMetric(shape=base.with_twists([-0.5, 0.0, 0.0]), curvature=K.k_star)
        with pytest.raises(NotLeftEarthquakeImageError) as info:
            u_map(K, h, base)
        assert info.value.weights[0] == pytest.approx(-0.5, abs=1e-6)

    def test_report_carries_inverse_estimate(self, base, shared_cache):
        K = CurvatureParam(K=-0.5)
        lamination = MultiCurve.from_pairs([("b1", 1.3)])
        report = u_map_report(K, scaled_earthquake_metric(K, base, lamination), base, cache=shared_cache)
        assert report.solve.converged
        assert report.weights[0] == pytest.approx(1.3, abs=1e-6)
        assert len(report.inverse_estimate) == 9
        assert all(row.passed for row in report.inverse_estimate)

    def test_uniform_sweep(self, base, shared_cache):
        lamination = MultiCurve.from_pairs([("b1", 1.0), ("b2", 0.5)])
        report = uniform_u_convergence_sweep(
            [-0.9, -0.99], base, lamination.scaled, C("a1 a2"), [0.0, 0.5, 1.0], cache=shared_cache
        )
        assert report.passed
        assert len(report.rows) == 6
        assert report.bounds["-0.99"] < report.bounds["-0.9"]

    def test_uniform_sweep_needs_grid(self, base):
        with pytest.raises(ValidationError):
            uniform_u_convergence_sweep([-0.9], base, MultiCurve().scaled, C("a1"), [])


class TestFilling:
    def test_marking_set_fills(self, base_rep, shared_cache):
        mu = MultiCurve.from_pairs([(c, 1.0) for c in marking_set()])
        assert is_filling_heuristic(mu, rep=base_rep, cache=shared_cache)

    def test_single_pants_curve_does_not_fill(self, base_rep, shared_cache):
        assert not is_filling_heuristic(MultiCurve.from_pairs([("b1", 1.0)]), rep=base_rep, cache=shared_cache)

    def test_probe_set_nonempty(self):
        with pytest.raises(ValidationError):
            is_filling_heuristic(MultiCurve.from_pairs([("b1", 1.0)]), probes=[])


@pytest.mark.slow
class TestProjection:
    MU = MultiCurve.from_pairs([(c, 1.0) for c in marking_set()])

    def test_converges_from_several_starts(self, rng):
        point, report = project_current(self.MU)
        assert report.converged
        for _ in range(3):
            other, again = project_current(self.MU, start=random_fn(rng, lengths=(0.8, 2.5), twists=(-0.5, 0.5)))
            assert again.converged
            np.testing.assert_allclose(other.as_vector(), point.as_vector(), atol=1e-5)

    def test_scale_invariance(self):
        point, _ = project_current(self.MU)
        scaled, _ = project_current(self.MU.scaled(3.0))
        np.testing.assert_allclose(scaled.as_vector(), point.as_vector(), atol=1e-6)

    def test_minimum_is_a_fixed_point(self):
        point, _ = project_current(self.MU)
        again, report = project_current(self.MU, start=point)
        assert report.iterations <= 2
        assert report.converged
        np.testing.assert_allclose(again.as_vector(), point.as_vector(), atol=1e-6)

    def test_minimum_is_a_local_minimum(self, rng):
        point, report = project_current(self.MU)
        assert report.converged
        minimum = _total_length(self.MU, point)
        for _ in range(20):
            nearby = FenchelNielsen.from_vector(point.as_vector() + rng.normal(scale=1e-2, size=6))
            assert _total_length(self.MU, nearby) >= minimum - 1e-9

    def test_omega_shifts_the_minimum(self):
        point, _ = project_current(self.MU)
        shifted, report = project_current(self.MU, omega=MultiCurve.from_pairs([("b1", 5.0)]))
        assert report.converged
        assert shifted.lengths[0] < point.lengths[0]

    def test_single_curve_escapes(self):
        with pytest.raises(EscapingMinimumError, match="non-filling or escaping minimum"):
            project_current(MultiCurve.from_pairs([("b1", 1.0)]))

    def test_zero_current(self):
        with pytest.raises(ValidationError):
            project_current(MultiCurve())
