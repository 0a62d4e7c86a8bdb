import math

import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from quakelab.core.errors import UnsupportedFastPathError, ValidationError
from quakelab.models.earthquake import EarthquakeMethod, EarthquakePath
from quakelab.models.lamination import MultiCurve
from quakelab.models.surface import CurveClass, FenchelNielsen, marking_set
from quakelab.services.earthquake import (
    asymptotic_slope,
    compose_paths,
    earthquake,
    earthquake_fn,
    insert_earthquake,
    resolve_method,
    verify_length_estimate,
)
from quakelab.services.surface_holonomy import curve_length, marking_spectrum
from tests.helpers import random_fn

C = CurveClass.parse
ALONG_B1 = MultiCurve.from_pairs([("b1", 1.0)])


def _path(base, lamination, t, **kwargs):
    return EarthquakePath(base=base, lamination=lamination, t=t, **kwargs)


class TestEarthquakeMap:
    def test_zero_time_is_identity(self, base, base_rep):
        rep = earthquake(_path(base, MultiCurve.from_pairs([("b1", 1.0), ("b2", 2.0)]), 0.0))
        np.testing.assert_allclose(marking_spectrum(rep), marking_spectrum(base_rep), atol=1e-12)

    def test_support_keeps_its_length(self, base):
        mu = MultiCurve.from_pairs([("b1", 1.0), ("a1 b1 A1 B1", 0.4)])
        rep = earthquake(_path(base, mu, 6.5))
        for curve in mu.curves:
            assert curve_length(rep, curve) == pytest.approx(1.5, abs=1e-9)

    def test_fast_path_adds_weighted_twist(self, base):
        fn = earthquake_fn(_path(base, MultiCurve.from_pairs([("b1", 2.0), ("b2", 0.5)]), 1.2))
        assert fn.twists == pytest.approx((2.4, 0.0, 0.6))
        assert fn.lengths == base.lengths

    def test_right_earthquake_twists_backwards(self, base):
        left = earthquake_fn(_path(base, ALONG_B1, 0.8))
        right = earthquake_fn(_path(base, ALONG_B1, 0.8, direction="right"))
        assert right.twists[0] == pytest.approx(-left.twists[0])

    def test_fast_path_needs_pants_support(self, base):
        with pytest.raises(UnsupportedFastPathError, match="unsupported fast path"):
            earthquake_fn(_path(base, MultiCurve.from_pairs([("a1", 1.0)]), 1.0))

    def test_method_resolution(self, base):
        assert resolve_method(_path(base, ALONG_B1, 1.0)) is EarthquakeMethod.FN_TWIST
        assert resolve_method(_path(base, MultiCurve.from_pairs([("a1", 1.0)]), 1.0)) is EarthquakeMethod.HOLONOMY_INSERT
        forced = _path(base, ALONG_B1, 1.0, method=EarthquakeMethod.HOLONOMY_INSERT)
        assert resolve_method(forced) is EarthquakeMethod.HOLONOMY_INSERT

    def test_negative_time_rejected(self, base):
        with pytest.raises(PydanticValidationError):
            _path(base, ALONG_B1, -1.0)

    def test_moving_along_the_path_keeps_time_nonnegative(self, base):
        path = _path(base, ALONG_B1, 1.0)
        assert path.at(2.5).t == 2.5
        with pytest.raises(PydanticValidationError):
            path.at(-0.5)


class TestMethodAgreement:
    @pytest.mark.parametrize(
        "pairs, t",
        [
            ([("b1", 1.0)], 0.7),
            ([("b2", 1.0), ("b1", 0.5)], 1.3),
            ([("a1 b1 A1 B1", 1.0)], 0.9),
        ],
    )
    def test_twist_and_insertion_agree(self, base, pairs, t):
        mu = MultiCurve.from_pairs(pairs)
        fast = earthquake(_path(base, mu, t, method=EarthquakeMethod.FN_TWIST))
        inserted = earthquake(_path(base, mu, t, method=EarthquakeMethod.HOLONOMY_INSERT))
        np.testing.assert_allclose(marking_spectrum(inserted), marking_spectrum(fast), atol=1e-7)

    @pytest.mark.slow
    def test_seeded_agreement_suite(self, rng):
        for _ in range(20):
            base = random_fn(rng, lengths=(0.8, 2.5), twists=(-0.5, 0.5))
            mask = rng.random(3) < 0.5
            mask[rng.integers(3)] = True
            words = [w for w, keep in zip(("b1", "a1 b1 A1 B1", "b2"), mask) if keep]
            mu = MultiCurve.from_pairs([(w, float(rng.uniform(0.2, 2.0))) for w in words])
            t = float(rng.uniform(0.1, 2.0))
            fast = earthquake(_path(base, mu, t, method=EarthquakeMethod.FN_TWIST))
            inserted = earthquake(_path(base, mu, t, method=EarthquakeMethod.HOLONOMY_INSERT))
            np.testing.assert_allclose(marking_spectrum(inserted), marking_spectrum(fast), atol=1e-7)


class TestInsertion:
    def test_nonpants_support(self, base_rep, budget):
        mu = MultiCurve.from_pairs([("a1", 1.0)])
        rep = insert_earthquake(base_rep, mu, 1.1, budget)
        assert rep.relator_residual < 1e-8
        assert curve_length(rep, C("a1")) == pytest.approx(curve_length(base_rep, C("a1")), abs=1e-9)
        assert curve_length(rep, C("b1")) > curve_length(base_rep, C("b1"))

    def test_zero_amount_flattens_marking(self):
        rep = earthquake(_path(FenchelNielsen(lengths=(1.0, 1.5, 1.2), twists=(2.3, 0.0, 0.0)), ALONG_B1, 0.0))
        assert rep.marking
        flat = insert_earthquake(rep, ALONG_B1, 0.0)
        assert flat.marking == {}
        np.testing.assert_allclose(marking_spectrum(flat), marking_spectrum(rep), atol=1e-9)


class TestFlow:
    def test_compose_paths(self, base):
        first, second = _path(base, ALONG_B1, 1.0), _path(base, ALONG_B1, 2.5)
        joined = compose_paths(first, second)
        assert joined.t == 3.5
        direct = curve_length(earthquake(joined), C("a1"))
        stepped = earthquake_fn(_path(earthquake_fn(first), ALONG_B1, 2.5))
        assert curve_length(earthquake(_path(stepped, ALONG_B1, 0.0)), C("a1")) == pytest.approx(direct, rel=1e-12)

    def test_compose_rejects_other_lamination(self, base):
        with pytest.raises(ValidationError):
            compose_paths(_path(base, ALONG_B1, 1.0), _path(base, MultiCurve.from_pairs([("b2", 1.0)]), 1.0))


class TestLengthEstimate:
    GRID = [0.1, 1.0, 10.0, 50.0]

    def test_dual_curve_certificate(self, base, shared_cache):
        cert = verify_length_estimate(base, ALONG_B1, C("a1"), self.GRID, slack=1e-9, cache=shared_cache)
        assert cert.passed
        assert cert.intersection == 1.0
        assert [row.t for row in cert.rows] == self.GRID
        for row in cert.rows:
            assert row.lower <= row.measured <= row.upper

    def test_closed_form_lengths(self, base, shared_cache):
        cert = verify_length_estimate(base, ALONG_B1, C("a1"), self.GRID, slack=1e-9, cache=shared_cache)
        half = math.cosh(cert.base_length / 2.0)
        for row in cert.rows:
            assert row.measured == pytest.approx(2.0 * math.acosh(half * math.cosh(row.t / 2.0)), rel=1e-9)

    def test_wrong_sign_fails(self, base, shared_cache):
        cert = verify_length_estimate(base, ALONG_B1, C("a1"), self.GRID, slack=1e-6, cache=shared_cache, sign=-1)
        assert not cert.passed
        assert cert.slack_used > 1.0

    def test_disjoint_curve_is_unchanged(self, base, shared_cache):
        cert = verify_length_estimate(base, ALONG_B1, C("a2"), self.GRID, slack=1e-9, cache=shared_cache)
        assert cert.intersection == 0.0
        assert all(row.measured == pytest.approx(cert.base_length, abs=1e-9) for row in cert.rows)

    def test_empty_grid(self, base):
        with pytest.raises(ValidationError):
            verify_length_estimate(base, ALONG_B1, C("a1"), [], slack=1e-9)

    def test_negative_scale_in_grid(self, base):
        with pytest.raises(ValidationError, match="nonnegative"):
            verify_length_estimate(base, ALONG_B1, C("a1"), [0.0, -1.0, 2.0], slack=1e-9)

    @pytest.mark.slow
    def test_marking_suite_on_random_surfaces(self, rng, shared_cache):
        for _ in range(10):
            base = random_fn(rng)
            mu = MultiCurve.from_pairs([("b1", float(rng.uniform(0.5, 2.0))), ("b2", float(rng.uniform(0.5, 2.0)))])
            for gamma in marking_set():
                cert = verify_length_estimate(base, mu, gamma, [0.5, 5.0, 20.0], slack=1e-9, cache=shared_cache)
                assert cert.passed, cert.model_dump()


class TestAsymptoticSlope:
    def test_slope_approaches_intersection(self, base, base_rep):
        l0 = curve_length(base_rep, C("a1"))
        slope = asymptotic_slope(base, ALONG_B1, C("a1"), 1e3)
        assert abs(slope - 1.0) <= l0 / 1e3

    def test_doubling_tightens(self, base):
        mu = MultiCurve.from_pairs([("b1", 1.0), ("b2", 3.0)])
        gamma = C("a1 a2")
        near = abs(asymptotic_slope(base, mu, gamma, 500.0) - 4.0)
        far = abs(asymptotic_slope(base, mu, gamma, 1000.0) - 4.0)
        assert far <= near

    def test_nonpositive_scale(self, base):
        with pytest.raises(ValidationError):
            asymptotic_slope(base, ALONG_B1, C("a1"), 0.0)
