import math

import numpy as np
import pytest

from ctxplan.world import CONTACT_BACKOFF, DriftRegion, InvalidControlError, Rect, World

UNIT = Rect(0.0, 0.0, 1.0, 1.0)


def make_world(obstacles=(), regions=(), default_drift=0.0, duration=0.1):
    return World(
        bounds=UNIT,
        obstacles=list(obstacles),
        goal=Rect(0.8, 0.8, 0.9, 0.9),
        drift_regions=list(regions),
        default_drift=default_drift,
        control_duration=duration,
    )


class TestRect:
    def test_inverted_corners_rejected(self):
        with pytest.raises(ValueError):
            Rect(0.5, 0.0, 0.4, 1.0)

    def test_contains_is_closed(self):
        r = Rect(0.2, 0.2, 0.4, 0.4)
        assert r.contains(0.2, 0.4)
        assert r.contains(0.3, 0.3)
        assert not r.contains(0.41, 0.3)

    def test_interior_intersects_ignores_shared_edges(self):
        a = Rect(0.0, 0.0, 0.5, 1.0)
        b = Rect(0.5, 0.0, 1.0, 1.0)
        assert a.intersects(b)
        assert not a.interior_intersects(b)


class TestWorldValidation:
    def test_goal_outside_bounds(self):
        with pytest.raises(ValueError, match="goal"):
            World(UNIT, [], Rect(0.9, 0.9, 1.1, 1.0))

    def test_goal_touching_obstacle(self):
        with pytest.raises(ValueError, match="obstacle"):
            World(UNIT, [Rect(0.5, 0.5, 0.8, 0.8)], Rect(0.8, 0.8, 0.9, 0.9))

    def test_overlapping_drift_regions(self):
        regions = [
            DriftRegion(Rect(0.0, 0.0, 0.5, 0.5), 0.01),
            DriftRegion(Rect(0.4, 0.4, 0.6, 0.6), 0.02),
        ]
        with pytest.raises(ValueError, match="overlap"):
            make_world(regions=regions)

    def test_touching_drift_regions_allowed(self):
        regions = [
            DriftRegion(Rect(0.0, 0.0, 0.5, 0.5), 0.01),
            DriftRegion(Rect(0.5, 0.0, 1.0, 0.5), 0.02),
        ]
        make_world(regions=regions)

    def test_negative_drift_rejected(self):
        with pytest.raises(ValueError):
            DriftRegion(Rect(0.0, 0.0, 0.5, 0.5), -0.01)

    def test_nonpositive_duration_rejected(self):
        with pytest.raises(ValueError):
            make_world(duration=0.0)


class TestNominalStep:
    def test_zero_control_is_identity(self):
        w = make_world()
        assert w.nominal_step((0.5, 0.5), (0.0, 0.0)) == (0.5, 0.5)

    def test_duration_scaled_step(self):
        w = make_world(duration=0.1)
        x, y = w.nominal_step((0.5, 0.5), (0.5, 0.0))
        assert x == pytest.approx(0.55, abs=1e-15)
        assert y == 0.5

    def test_clamped_to_bounds(self):
        w = make_world(duration=0.1)
        assert w.nominal_step((0.99, 0.5), (0.5, 0.0)) == (1.0, 0.5)

    def test_control_out_of_bounds(self):
        w = make_world()
        with pytest.raises(InvalidControlError):
            w.nominal_step((0.5, 0.5), (0.6, 0.0))


class TestTrueStep:
    def test_drift_added_to_nominal(self):
        region = DriftRegion(Rect(0.4, 0.4, 0.6, 0.6), 0.012)
        w = make_world(regions=[region], default_drift=0.0, duration=0.1)
        x, y = w.true_step((0.5, 0.5), (0.5, 0.0))
        assert x == pytest.approx(0.562, abs=1e-15)
        assert y == 0.5

    def test_zero_drift_equals_nominal_everywhere(self):
        w = make_world(default_drift=0.0)
        rng = np.random.default_rng(0)
        for _ in range(200):
            s = tuple(rng.uniform(0, 1, 2))
            u = tuple(rng.uniform(-0.5, 0.5, 2))
            assert w.true_step(s, u) == w.nominal_step(s, u)

    def test_stops_at_obstacle_contact(self):
        w = make_world(obstacles=[Rect(0.54, 0.4, 0.6, 0.6)], default_drift=0.012)
        x, y = w.true_step((0.5, 0.5), (0.5, 0.0))
        # contact at the obstacle face, pulled back so the state stays free
        assert x == pytest.approx(0.54, abs=2e-9)
        assert x < 0.54
        assert y == 0.5

    def test_can_leave_a_contact_state(self):
        w = make_world(obstacles=[Rect(0.54, 0.4, 0.6, 0.6)], default_drift=0.012)
        contact = w.true_step((0.5, 0.5), (0.5, 0.0))
        moved = w.true_step(contact, (-0.5, 0.0))
        assert moved[0] == pytest.approx(contact[0] - 0.05 + 0.012, abs=1e-12)

    def test_never_strictly_inside_an_obstacle(self):
        obstacle = Rect(0.4, 0.3, 0.6, 0.7)
        w = make_world(obstacles=[obstacle], default_drift=0.02)
        rng = np.random.default_rng(1)
        x = (0.1, 0.5)
        for _ in range(500):
            u = tuple(rng.uniform(-0.5, 0.5, 2))
            x = w.true_step(x, u)
            strictly_inside = (
                obstacle.xmin < x[0] < obstacle.xmax
                and obstacle.ymin < x[1] < obstacle.ymax
            )
            assert not strictly_inside

    def test_wall_clamp_acts_as_stop(self):
        w = make_world(default_drift=0.0, duration=0.1)
        assert w.true_step((0.98, 0.5), (0.5, 0.0)) == (1.0, 0.5)


class TestDriftLookup:
    def test_region_and_default_values(self):
        regions = [DriftRegion(Rect(0.2, 0.2, 0.4, 0.4), 0.024)]
        w = make_world(regions=regions, default_drift=0.006)
        assert w.drift_at((0.3, 0.3)) == 0.024
        assert w.drift_at((0.7, 0.7)) == 0.006

    def test_lookup_is_total_and_piecewise_constant(self):
        regions = [
            DriftRegion(Rect(0.0, 0.0, 0.5, 1.0), 0.012),
            DriftRegion(Rect(0.5, 0.5, 1.0, 1.0), 0.018),
        ]
        w = make_world(regions=regions, default_drift=0.006)
        rng = np.random.default_rng(2)
        for _ in range(500):
            p = tuple(rng.uniform(0, 1, 2))
            assert w.drift_at(p) in (0.006, 0.012, 0.018)

    def test_identical_worlds_identical_lookups(self):
        regions = [DriftRegion(Rect(0.1, 0.1, 0.6, 0.6), 0.018)]
        w1 = make_world(regions=regions, default_drift=0.006)
        w2 = make_world(regions=regions, default_drift=0.006)
        rng = np.random.default_rng(3)
        for _ in range(200):
            p = tuple(rng.uniform(0, 1, 2))
            assert w1.drift_at(p) == w2.drift_at(p)


class TestSegmentCollides:
    def test_degenerate_segment_in_free_space(self):
        w = make_world(obstacles=[Rect(0.4, 0.4, 0.6, 0.6)])
        assert not w.segment_collides((0.2, 0.2), (0.2, 0.2))

    def test_crossing_interior(self):
        w = make_world(obstacles=[Rect(0.4, 0.4, 0.6, 0.6)])
        assert w.segment_collides((0.1, 0.5), (0.9, 0.5))

    def test_tangent_counts_as_collision(self):
        w = make_world(obstacles=[Rect(0.4, 0.4, 0.6, 0.6)])
        assert w.segment_collides((0.1, 0.6), (0.9, 0.6))

    def test_agrees_with_dense_point_sampling(self):
        """Randomized cross-check against a 1000-point sampling oracle.

        Sampling cannot certify near-tangent cases, so segments whose closest
        sample sits within one sampling step of the obstacle are skipped.
        """
        obstacle = Rect(0.35, 0.4, 0.65, 0.6)
        w = make_world(obstacles=[obstacle])
        rng = np.random.default_rng(4)
        checked = 0
        for _ in range(400):
            a = rng.uniform(0, 1, 2)
            b = rng.uniform(0, 1, 2)
            ts = np.linspace(0.0, 1.0, 1001)
            pts = a[None, :] + ts[:, None] * (b - a)[None, :]
            inside = (
                (pts[:, 0] >= obstacle.xmin)
                & (pts[:, 0] <= obstacle.xmax)
                & (pts[:, 1] >= obstacle.ymin)
                & (pts[:, 1] <= obstacle.ymax)
            )
            gap_x = np.maximum(obstacle.xmin - pts[:, 0], pts[:, 0] - obstacle.xmax)
            gap_y = np.maximum(obstacle.ymin - pts[:, 1], pts[:, 1] - obstacle.ymax)
            min_gap = np.max(np.stack([gap_x, gap_y]), axis=0).min()
            step = float(np.linalg.norm(b - a)) / 1000.0
            result = w.segment_collides(tuple(a), tuple(b))
            if inside.any():
                assert result
                checked += 1
            elif min_gap > step:
                assert not result
                checked += 1
        assert checked > 300


class TestGoal:
    def test_center_corner_and_outside(self):
        w = make_world()
        assert w.in_goal((0.85, 0.85))
        assert w.in_goal((0.8, 0.8))  # closed set: the corner belongs to the goal
        assert not w.in_goal((0.79, 0.85))
