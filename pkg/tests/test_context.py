import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxplan.context import GridSpec, context_distance, context_vector, similarity
from ctxplan.deviation import make_transition
from ctxplan.world import Rect, World

GRID = GridSpec()


def make_world(obstacles=()):
    return World(
        bounds=Rect(0.0, 0.0, 1.0, 1.0),
        obstacles=list(obstacles),
        goal=Rect(0.85, 0.85, 0.95, 0.95),
        default_drift=0.006,
    )


class TestGridSpec:
    def test_even_dimensions_rejected(self):
        with pytest.raises(ValueError):
            GridSpec(width=4)
        with pytest.raises(ValueError):
            GridSpec(height=6)

    def test_offsets_row_major_from_min_corner(self):
        offs = GridSpec(width=3, height=3, resolution=0.1).offsets
        assert offs.shape == (9, 2)
        np.testing.assert_allclose(offs[0], [-0.1, -0.1])
        np.testing.assert_allclose(offs[1], [0.0, -0.1])  # x varies fastest
        np.testing.assert_allclose(offs[8], [0.1, 0.1])

    def test_size(self):
        assert GRID.size == 25


class TestContextVector:
    def test_free_space_far_from_obstacles(self):
        w = make_world(obstacles=[Rect(0.7, 0.7, 0.8, 0.8)])
        z = context_vector(w, GRID, (0.3, 0.3), 0.012)
        assert z.shape == (26,)
        np.testing.assert_array_equal(z[:25], 0.0)
        assert z[25] == 0.012

    def test_obstacle_face_spanning_right_column(self):
        # Obstacle face sits between the +0.05 and +0.10 grid columns, so
        # exactly the rightmost column of the 5x5 grid is occupied.
        w = make_world(obstacles=[Rect(0.57, 0.3, 0.8, 0.7)])
        z = context_vector(w, GRID, (0.5, 0.5), 0.006)
        occ = z[:25].reshape(5, 5)
        np.testing.assert_array_equal(occ[:, 4], 1.0)
        np.testing.assert_array_equal(occ[:, :4], 0.0)

    def test_world_corner_marks_out_of_bounds_occupied(self):
        w = make_world()
        z = context_vector(w, GRID, (0.0, 0.0), 0.006)
        occ = z[:25].reshape(5, 5)
        # grid points with a negative coordinate (first two rows/columns)
        np.testing.assert_array_equal(occ[:2, :], 1.0)
        np.testing.assert_array_equal(occ[:, :2], 1.0)
        np.testing.assert_array_equal(occ[2:, 2:], 0.0)
        assert occ.sum() == 16

    def test_boundary_points_are_in_bounds(self):
        w = make_world()
        z = context_vector(w, GRID, (0.1, 0.1), 0.006)
        np.testing.assert_array_equal(z[:25], 0.0)

    def test_independent_of_control(self):
        w = make_world(obstacles=[Rect(0.6, 0.4, 0.7, 0.6)])
        t1 = make_transition(w, GRID, (0.5, 0.5), (0.5, 0.0))
        t2 = make_transition(w, GRID, (0.5, 0.5), (-0.5, -0.25))
        np.testing.assert_array_equal(t1.context, t2.context)

    def test_negative_mde_rejected(self):
        w = make_world()
        with pytest.raises(ValueError):
            context_vector(w, GRID, (0.5, 0.5), -0.001)


class TestSimilarity:
    def test_equal_vectors(self):
        z = np.array([0.0, 1.0, 0.0, 0.012])
        assert similarity(z, z) == 1.0

    def test_single_binary_entry_difference(self):
        za = np.zeros(26)
        zb = np.zeros(26)
        zb[3] = 1.0
        assert similarity(za, zb) == math.exp(-0.5)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            similarity(np.zeros(5), np.zeros(6))

    @given(
        st.lists(st.floats(-5, 5), min_size=4, max_size=4),
        st.lists(st.floats(-5, 5), min_size=4, max_size=4),
    )
    @settings(max_examples=200)
    def test_symmetric_and_in_range(self, a, b):
        za, zb = np.array(a), np.array(b)
        s = similarity(za, zb)
        assert s == similarity(zb, za)
        assert 0.0 < s <= 1.0
        if np.array_equal(za, zb):
            assert s == 1.0
        elif np.linalg.norm(za - zb) > 1e-12:  # below that, exp() rounds to 1.0
            assert s < 1.0

    def test_monotone_in_distance(self):
        base = np.zeros(26)
        sims = []
        for scale in (0.0, 0.5, 1.0, 2.0, 4.0):
            other = base.copy()
            other[0] = scale
            sims.append(similarity(base, other))
        assert sims == sorted(sims, reverse=True)

    def test_distance_is_euclidean(self):
        za = np.array([0.0, 0.0, 0.0])
        zb = np.array([3.0, 4.0, 0.0])
        assert context_distance(za, zb) == 5.0
