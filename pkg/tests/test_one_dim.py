import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convex_order.discrete import (
    WotConfig,
    barycentric_pushforward,
    is_convex_ordered_1d,
    solve_wot,
)
from convex_order.measures import DiscreteMeasure, EmptyMeasureError
from convex_order.one_dim import (
    GFunction,
    g_function,
    lower_convex_hull,
    project_1d,
    project_1d_detail,
    quantile_of,
    w2_1d,
)
from _utils import random_discrete_1d


def measure_1d(values, weights):
    return DiscreteMeasure.from_1d(values, weights)


@st.composite
def discrete_1d(draw, max_atoms=6):
    n = draw(st.integers(1, max_atoms))
    values = draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    weights = np.asarray(raw) / np.sum(raw)
    return measure_1d(values, weights)


class TestQuantile:
    def test_dirac(self):
        q = quantile_of(measure_1d([0.0], [1.0]))
        np.testing.assert_allclose(q.breakpoints, [0.0, 1.0])
        np.testing.assert_allclose(q.values, [0.0])

    def test_symmetric_two_point(self):
        q = quantile_of(measure_1d([-1.0, 1.0], [0.5, 0.5]))
        np.testing.assert_allclose(q.breakpoints, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(q.values, [-1.0, 1.0])

    def test_uneven_weights(self):
        q = quantile_of(measure_1d([0.0, 2.0], [0.25, 0.75]))
        np.testing.assert_allclose(q.breakpoints, [0.0, 0.25, 1.0])
        np.testing.assert_allclose(q.values, [0.0, 2.0])

    def test_empty_measure_rejected(self):
        with pytest.raises(EmptyMeasureError):
            DiscreteMeasure(np.zeros((0, 1)), [])

    @settings(max_examples=50, deadline=None)
    @given(discrete_1d())
    def test_quantile_roundtrip(self, measure):
        q = quantile_of(measure)
        assert np.all(np.diff(q.values) >= 0)
        back = q.to_measure()
        np.testing.assert_allclose(back.points, measure.points, atol=1e-12)
        np.testing.assert_allclose(back.weights, measure.weights, atol=1e-12)
        assert q.mean() == pytest.approx(float(measure.barycenter[0]), abs=1e-12)


class TestGFunction:
    def test_identical_measures_give_zero(self):
        m = measure_1d([-1.0, 1.0], [0.5, 0.5])
        g = g_function(m, m)
        np.testing.assert_allclose(g.node_values, 0.0, atol=1e-15)

    def test_spread_minus_dirac_is_a_vee(self):
        g = g_function(measure_1d([-1.0, 1.0], [0.5, 0.5]), measure_1d([0.0], [1.0]))
        np.testing.assert_allclose(g.breakpoints, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(g.node_values, [0.0, -0.5, 0.0], atol=1e-15)

    def test_dirac_minus_spread_is_a_tent(self):
        g = g_function(measure_1d([0.0], [1.0]), measure_1d([-1.0, 1.0], [0.5, 0.5]))
        np.testing.assert_allclose(g.node_values, [0.0, 0.5, 0.0], atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(discrete_1d(), discrete_1d())
    def test_endpoint_is_mean_difference(self, mu, nu):
        g = g_function(mu, nu)
        assert g.node_values[0] == 0.0
        expected = float(mu.barycenter[0] - nu.barycenter[0])
        assert g.node_values[-1] == pytest.approx(expected, abs=1e-12)


class TestLowerConvexHull:
    def test_convex_input_is_unchanged(self):
        g = GFunction([0.0, 0.5, 1.0], [0.0, -0.5, 0.0])
        hull = lower_convex_hull(g)
        np.testing.assert_allclose(hull.breakpoints, g.breakpoints)
        np.testing.assert_allclose(hull.node_values, g.node_values)

    def test_tent_collapses_to_chord(self):
        g = GFunction([0.0, 0.5, 1.0], [0.0, 0.5, 0.0])
        hull = lower_convex_hull(g)
        np.testing.assert_allclose(hull.breakpoints, [0.0, 1.0])
        np.testing.assert_allclose(hull.node_values, [0.0, 0.0])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=12))
    def test_hull_is_convex_minorant_and_idempotent(self, nodes):
        grid = np.linspace(0.0, 1.0, len(nodes))
        g = GFunction(grid, nodes)
        hull = lower_convex_hull(g)
        assert np.all(np.diff(hull.slopes()) >= -1e-12)
        assert hull.node_values[0] == g.node_values[0]
        assert hull.node_values[-1] == g.node_values[-1]
        # minorant on the original nodes
        idx = np.searchsorted(hull.breakpoints, grid, side="right") - 1
        idx = np.clip(idx, 0, hull.breakpoints.size - 2)
        left = hull.breakpoints[idx]
        slopes = hull.slopes()[idx]
        values = hull.node_values[idx] + slopes * (grid - left)
        assert np.all(values <= np.asarray(nodes) + 1e-9)
        again = lower_convex_hull(hull)
        np.testing.assert_allclose(again.node_values, hull.node_values, atol=1e-12)


class TestProject1d:
    def test_spread_above_dirac(self):
        mu = measure_1d([-1.0, 1.0], [0.5, 0.5])
        nu = measure_1d([0.0], [1.0])
        below, above = project_1d(mu, nu)
        np.testing.assert_allclose(below.points, [[0.0]])
        np.testing.assert_allclose(above.points, mu.points)
        np.testing.assert_allclose(above.weights, mu.weights)

    def test_dirac_below_spread(self):
        mu = measure_1d([0.0], [1.0])
        nu = measure_1d([-1.0, 1.0], [0.5, 0.5])
        below, above = project_1d(mu, nu)
        np.testing.assert_allclose(below.points, [[0.0]])
        np.testing.assert_allclose(above.points, nu.points)

    def test_shifted_spread_against_dirac(self):
        # brute force on this instance: the only measure dominated by a
        # Dirac is the Dirac itself, and the projection above must equal mu
        mu = measure_1d([0.0, 2.0], [0.5, 0.5])
        nu = measure_1d([0.0], [1.0])
        detail = project_1d_detail(mu, nu)
        np.testing.assert_allclose(detail.below.points, [[0.0]])
        np.testing.assert_allclose(detail.above.points, mu.points)
        assert detail.distance_sq == pytest.approx(2.0, abs=1e-12)
        assert w2_1d(mu, detail.below) ** 2 == pytest.approx(2.0, abs=1e-12)
        assert w2_1d(nu, detail.above) ** 2 == pytest.approx(2.0, abs=1e-12)

    def test_means_are_exchanged(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            mu, nu = random_discrete_1d(rng), random_discrete_1d(rng)
            below, above = project_1d(mu, nu)
            assert float(below.barycenter[0]) == pytest.approx(
                float(nu.barycenter[0]), abs=1e-12
            )
            assert float(above.barycenter[0]) == pytest.approx(
                float(mu.barycenter[0]), abs=1e-12
            )

    def test_projections_are_convex_ordered(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            mu, nu = random_discrete_1d(rng), random_discrete_1d(rng)
            below, above = project_1d(mu, nu)
            assert is_convex_ordered_1d(below, nu)
            assert is_convex_ordered_1d(mu, above)

    def test_second_moment_identity(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            mu, nu = random_discrete_1d(rng), random_discrete_1d(rng)
            below, above = project_1d(mu, nu)
            lhs = below.second_moment() + above.second_moment()
            rhs = mu.second_moment() + nu.second_moment()
            assert lhs == pytest.approx(rhs, abs=1e-12 * (1.0 + abs(rhs)))

    def test_distance_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            mu, nu = random_discrete_1d(rng), random_discrete_1d(rng)
            detail = project_1d_detail(mu, nu)
            scale = 1.0 + detail.cross_distance_sq
            assert w2_1d(nu, detail.below) ** 2 == pytest.approx(
                detail.cross_distance_sq, abs=1e-12 * scale
            )
            assert w2_1d(mu, detail.above) ** 2 == pytest.approx(
                detail.cross_distance_sq, abs=1e-12 * scale
            )

    def test_distance_equality_both_sides(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            mu, nu = random_discrete_1d(rng), random_discrete_1d(rng)
            detail = project_1d_detail(mu, nu)
            scale = 1.0 + detail.distance_sq
            assert w2_1d(mu, detail.below) ** 2 == pytest.approx(
                detail.distance_sq, abs=1e-12 * scale
            )
            assert w2_1d(nu, detail.above) ** 2 == pytest.approx(
                detail.distance_sq, abs=1e-12 * scale
            )

    def test_agreement_with_transport_solver(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            mu, nu = random_discrete_1d(rng), random_discrete_1d(rng)
            below, _ = project_1d(mu, nu)
            result = solve_wot(mu, nu, WotConfig(fw_tol=1e-13))
            pushed = barycentric_pushforward(result.coupling)
            assert w2_1d(below, pushed) <= 1e-6
