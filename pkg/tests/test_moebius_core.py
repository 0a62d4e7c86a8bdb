"""Tests for the PSL(2,R) and Minkowski kernels and their value types."""

import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings

from quakelab.core.errors import DegenerateConfigurationError, NonHyperbolicError, ValidationError
from quakelab.models.geometry import BoundaryPoint, GeodesicLine, Isometry2, IsometryKind, MinkowskiVec
from quakelab.services.moebius_core import (
    MINKOWSKI_METRIC,
    apply_to_boundary,
    apply_to_line,
    axis,
    classify_isometry,
    cyclic_order_sign,
    distance_to_line,
    evaluate_word,
    frame_sending,
    geodesics_link,
    hyperbolic_distance,
    left_shear,
    length_from_log_trace,
    letter_table,
    random_lorentz,
    translation_along,
    translation_length,
    word_translation_length,
)
from tests.helpers import hyperbolic_isometries, random_isometry

HALF = Isometry2(math.exp(0.5), 0.0, 0.0, math.exp(-0.5))
GOLDEN = Isometry2.from_matrix([[2.0, 1.0], [1.0, 1.0]])


class TestIsometry2:
    def test_scalar_matrix_normalizes_to_identity(self):
        assert Isometry2.from_matrix([[2.0, 0.0], [0.0, 2.0]]) == Isometry2.identity()

    def test_negative_trace_representative_is_flipped(self):
        g = Isometry2.from_matrix([[-1.0, -1.0], [0.0, -1.0]])
        assert (g.a, g.b, g.c, g.d) == (1.0, 1.0, 0.0, 1.0)

    def test_orientation_reversing_matrix_rejected(self):
        with pytest.raises(ValidationError):
            Isometry2.from_matrix([[0.0, 1.0], [1.0, 0.0]])

    def test_inverse_composes_to_identity(self, rng):
        g = random_isometry(rng)
        assert (g @ g.inverse()).distance_to(Isometry2.identity()) < 1e-12

    def test_action_on_points(self):
        assert Isometry2(1.0, 1.0, 0.0, 1.0)(1j) == 1 + 1j

    def test_sl2_entries_are_kept_verbatim(self):
        g = Isometry2.from_sl2([[3.0e6, 7.0], [2.0, 5.0e-6]])
        assert (g.a, g.b, g.c, g.d) == (3.0e6, 7.0, 2.0, 5.0e-6)
        flipped = Isometry2.from_sl2([[-2.0, -1.0], [-1.0, -1.0]])
        assert flipped == GOLDEN


class TestBoundaryAndLines:
    def test_minus_infinity_is_infinity(self):
        assert BoundaryPoint(-math.inf) == BoundaryPoint.infinity()
        assert BoundaryPoint.from_homogeneous(1.0, 0.0).is_infinite

    def test_nan_rejected(self):
        with pytest.raises(ValidationError):
            BoundaryPoint(math.nan)

    def test_lines_are_unordered(self):
        assert GeodesicLine.through(0.0, 1.0) == GeodesicLine.through(1.0, 0.0)
        assert len({GeodesicLine.through(0.0, 1.0), GeodesicLine.through(1.0, 0.0)}) == 1

    def test_equal_endpoints_rejected(self):
        with pytest.raises(DegenerateConfigurationError):
            GeodesicLine.through(2.0, 2.0)


class TestClassification:
    def test_identity(self):
        assert classify_isometry(Isometry2.identity()) is IsometryKind.IDENTITY

    def test_hyperbolic(self):
        assert classify_isometry(HALF) is IsometryKind.HYPERBOLIC

    def test_parabolic(self):
        assert classify_isometry(Isometry2(1.0, 1.0, 0.0, 1.0)) is IsometryKind.PARABOLIC

    def test_elliptic(self):
        c, s = math.cos(0.3), math.sin(0.3)
        assert classify_isometry(Isometry2.from_matrix([[c, -s], [s, c]])) is IsometryKind.ELLIPTIC


class TestTranslationLength:
    def test_diagonal(self):
        assert translation_length(HALF) == pytest.approx(1.0, abs=1e-14)

    def test_closed_form(self):
        assert translation_length(GOLDEN) == pytest.approx(2.0 * math.acosh(1.5), abs=1e-14)
        assert translation_length(GOLDEN) == pytest.approx(1.924847, abs=1e-6)

    def test_parabolic_rejected(self):
        with pytest.raises(NonHyperbolicError, match="no positive translation length"):
            translation_length(Isometry2(1.0, 1.0, 0.0, 1.0))

    @settings(max_examples=50, deadline=None)
    @given(hyperbolic_isometries())
    def test_recovers_constructed_length(self, case):
        g, length = case
        assert translation_length(g) == pytest.approx(length, rel=1e-9)

    def test_conjugation_invariance(self, rng):
        for _ in range(20):
            h = random_isometry(rng)
            assert translation_length(GOLDEN.conjugate_by(h)) == pytest.approx(translation_length(GOLDEN), abs=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(hyperbolic_isometries())
    def test_powers_and_inverse(self, case):
        g, length = case
        power = g
        for n in range(2, 6):
            power = power @ g
            assert translation_length(power) == pytest.approx(n * length, rel=1e-9)
        assert translation_length(g.inverse()) == pytest.approx(length, rel=1e-9)

    def test_log_trace_form(self):
        assert length_from_log_trace(math.log(2.0 * math.cosh(0.5))) == pytest.approx(1.0, abs=1e-14)
        assert length_from_log_trace(150.0) == 300.0


class TestAxis:
    def test_diagonal_axis_runs_from_zero_to_infinity(self):
        line = axis(HALF)
        assert line.p == BoundaryPoint(0.0)
        assert line.q.is_infinite

    def test_quadratic_roots(self):
        ends = sorted(x.value for x in axis(GOLDEN).endpoints)
        npt.assert_allclose(ends, [(1 - math.sqrt(5)) / 2, (1 + math.sqrt(5)) / 2], atol=1e-14)

    def test_equivariance_under_shift(self):
        shift = Isometry2(1.0, 1.0, 0.0, 1.0)
        before = sorted(x.value for x in axis(GOLDEN).endpoints)
        after = sorted(x.value for x in axis(GOLDEN.conjugate_by(shift)).endpoints)
        npt.assert_allclose(after, np.array(before) + 1.0, atol=1e-12)

    def test_attracting_end_is_q(self, rng):
        for _ in range(10):
            h = random_isometry(rng)
            line = axis(HALF.conjugate_by(h))
            repelling = apply_to_boundary(h, BoundaryPoint(0.0))
            attracting = apply_to_boundary(h, BoundaryPoint.infinity())
            assert line.p.value == pytest.approx(repelling.value, rel=1e-9, abs=1e-9)
            assert line.q.value == pytest.approx(attracting.value, rel=1e-9, abs=1e-9)


class TestOrderAndLinking:
    def test_left_of_upward_axis_is_negative_reals(self):
        zero, inf = BoundaryPoint(0.0), BoundaryPoint.infinity()
        assert cyclic_order_sign(zero, inf, BoundaryPoint(-1.0)) == 1
        assert cyclic_order_sign(zero, inf, BoundaryPoint(1.0)) == -1
        assert cyclic_order_sign(zero, inf, zero) == 0

    @pytest.mark.parametrize(
        "first, second, expected",
        [
            ((0.0, math.inf), (-1.0, 1.0), True),
            ((0.0, 1.0), (2.0, 3.0), False),
            ((0.0, 2.0), (1.0, 3.0), True),
        ],
    )
    def test_link_examples(self, first, second, expected):
        assert geodesics_link(GeodesicLine.through(*first), GeodesicLine.through(*second)) is expected

    def test_linking_is_symmetric_and_isometry_invariant(self, rng):
        for _ in range(50):
            ends = rng.normal(scale=3.0, size=4)
            first, second = GeodesicLine.through(ends[0], ends[1]), GeodesicLine.through(ends[2], ends[3])
            linked = geodesics_link(first, second)
            assert geodesics_link(second, first) is linked
            h = random_isometry(rng)
            assert geodesics_link(apply_to_line(h, first), apply_to_line(h, second)) is linked

    def test_shared_endpoint_is_degenerate(self):
        with pytest.raises(DegenerateConfigurationError, match="degenerate configuration"):
            geodesics_link(GeodesicLine.through(0.0, 1.0), GeodesicLine.through(1.0, 2.0))


class TestFramesAndShears:
    def test_frame_sending(self):
        p, q = BoundaryPoint(-0.7), BoundaryPoint(2.5)
        frame = frame_sending(p, q)
        assert apply_to_boundary(frame, p).value == pytest.approx(0.0, abs=1e-12)
        image = apply_to_boundary(frame, q)
        assert image.is_infinite or abs(image.value) > 1e12

    def test_translation_moves_toward_q(self):
        move = translation_along(GeodesicLine(BoundaryPoint(0.0), BoundaryPoint.infinity()), 1.0)
        assert move(1j) == pytest.approx(math.e * 1j, abs=1e-12)

    def test_left_shear_depends_on_viewer_side(self):
        line = GeodesicLine(BoundaryPoint(0.0), BoundaryPoint.infinity())
        from_left = left_shear(line, 1.0, BoundaryPoint(-1.0))
        from_right = left_shear(line, 1.0, BoundaryPoint(1.0))
        assert from_left(1j) == pytest.approx(math.e * 1j, abs=1e-12)
        assert from_right(1j) == pytest.approx(1j / math.e, abs=1e-12)

    def test_viewer_on_line_rejected(self):
        with pytest.raises(DegenerateConfigurationError):
            left_shear(GeodesicLine.through(0.0, 1.0), 1.0, BoundaryPoint(1.0))


class TestDistances:
    def test_vertical_distance(self):
        assert hyperbolic_distance(1j, math.e * 1j) == pytest.approx(1.0, abs=1e-14)

    def test_distance_to_semicircle(self):
        assert distance_to_line(2j, GeodesicLine.through(-1.0, 1.0)) == pytest.approx(math.log(2.0), abs=1e-14)

    def test_point_on_line(self):
        assert distance_to_line(3j, GeodesicLine(BoundaryPoint(0.0), BoundaryPoint.infinity())) == 0.0


class TestWords:
    def test_evaluate_word_matches_matrix_product(self, rng):
        g, h = random_isometry(rng), random_isometry(rng)
        table = letter_table({"a1": g, "b1": h})
        expected = g @ h @ g.inverse() @ h.inverse()
        assert evaluate_word(table, ("a1", "b1", "A1", "B1")).distance_to(expected) < 1e-10

    def test_long_powers_do_not_overflow(self):
        table = letter_table({"b1": HALF})
        assert word_translation_length(table, ("b1",) * 400) == pytest.approx(400.0, rel=1e-12)

    def test_short_word_length(self):
        table = letter_table({"b1": GOLDEN})
        assert word_translation_length(table, ("b1", "b1")) == pytest.approx(2 * translation_length(GOLDEN), rel=1e-12)


class TestMinkowski:
    def test_pairing_signature(self):
        assert MinkowskiVec(1.0, 0.0, 0.0, 0.0).norm2 == -1.0
        assert MinkowskiVec(0.0, 0.0, 0.0, 1.0).norm2 == 1.0

    def test_random_lorentz_preserves_metric(self, rng):
        for _ in range(10):
            transform = random_lorentz(rng)
            npt.assert_allclose(transform.T @ MINKOWSKI_METRIC @ transform, MINKOWSKI_METRIC, atol=1e-11)
            assert transform[0, 0] > 0

    def test_pairing_is_symmetric_and_bilinear(self, rng):
        for _ in range(20):
            u, v, w = (MinkowskiVec.from_array(rng.normal(size=4)) for _ in range(3))
            s = float(rng.normal())
            assert u.pair(w) == pytest.approx(w.pair(u), abs=1e-12)
            assert (u.scaled(s) + v).pair(w) == pytest.approx(s * u.pair(w) + v.pair(w), abs=1e-10)
            assert w.pair(u + v.scaled(s)) == pytest.approx(w.pair(u) + s * w.pair(v), abs=1e-10)
