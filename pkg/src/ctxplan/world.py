"""2D point-robot world: geometry, drift field, and one-step dynamics.

The robot lives in an axis-aligned rectangular workspace with rectangular
obstacles. Its nominal dynamics move the state by a duration-scaled control;
the true dynamics add a position-dependent rightward drift and stop the robot
at the first obstacle contact. States and controls are plain (x, y) tuples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

Point = tuple[float, float]

# States returned by a blocked sweep are pulled back along the motion
# direction by this distance so they stay strictly outside the (closed)
# obstacle and remain usable as replanning starts.
CONTACT_BACKOFF = 1e-9


class InvalidControlError(ValueError):
    """A control component exceeds the configured bound."""


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        for v in (self.xmin, self.ymin, self.xmax, self.ymax):
            if not math.isfinite(v):
                raise ValueError(f"rectangle coordinates must be finite: {self}")
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError(f"rectangle min corner must not exceed max corner: {self}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def center(self) -> Point:
        return (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.xmin <= other.xmin
            and self.ymin <= other.ymin
            and self.xmax >= other.xmax
            and self.ymax >= other.ymax
        )

    def intersects(self, other: "Rect") -> bool:
        """Closed intersection test (touching counts)."""
        return (
            self.xmin <= other.xmax
            and other.xmin <= self.xmax
            and self.ymin <= other.ymax
            and other.ymin <= self.ymax
        )

    def interior_intersects(self, other: "Rect") -> bool:
        """True if the open interiors overlap (shared edges do not count)."""
        return (
            self.xmin < other.xmax
            and other.xmin < self.xmax
            and self.ymin < other.ymax
            and other.ymin < self.ymax
        )

    def as_row(self) -> list[float]:
        return [self.xmin, self.ymin, self.xmax, self.ymax]


@dataclass(frozen=True)
class DriftRegion:
    """Rectangular patch with a constant per-step drift magnitude."""

    rect: Rect
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta >= 0.0):
            raise ValueError(f"drift delta must be finite and >= 0, got {self.delta}")


class World:
    """Immutable workspace; safe to share across concurrently running episodes."""

    def __init__(
        self,
        bounds: Rect,
        obstacles: list[Rect],
        goal: Rect,
        drift_regions: list[DriftRegion] = (),
        default_drift: float = 0.0,
        control_duration: float = 0.1,
        control_bound: float = 0.5,
    ):
        if control_duration <= 0.0:
            raise ValueError(f"control duration must be > 0, got {control_duration}")
        if control_bound <= 0.0:
            raise ValueError(f"control bound must be > 0, got {control_bound}")
        if not (math.isfinite(default_drift) and default_drift >= 0.0):
            raise ValueError(f"default drift must be finite and >= 0, got {default_drift}")
        if not bounds.contains_rect(goal):
            raise ValueError("goal region must lie within the world bounds")
        for i, obs in enumerate(obstacles):
            if not bounds.contains_rect(obs):
                raise ValueError(f"obstacle {i} extends outside the world bounds")
            if goal.intersects(obs):
                raise ValueError(f"goal region intersects obstacle {i}")
        regions = list(drift_regions)
        for i, a in enumerate(regions):
            if not bounds.contains_rect(a.rect):
                raise ValueError(f"drift region {i} extends outside the world bounds")
            for j in range(i + 1, len(regions)):
                if a.rect.interior_intersects(regions[j].rect):
                    raise ValueError(f"drift regions {i} and {j} overlap")

        self.bounds = bounds
        self.obstacles = list(obstacles)
        self.goal = goal
        self.drift_regions = regions
        self.default_drift = float(default_drift)
        self.control_duration = float(control_duration)
        self.control_bound = float(control_bound)

        self.obstacle_rows = np.array(
            [r.as_row() for r in self.obstacles], dtype=np.float64
        ).reshape(len(self.obstacles), 4)
        self.drift_rows = np.array(
            [r.rect.as_row() + [r.delta] for r in regions], dtype=np.float64
        ).reshape(len(regions), 5)

    # -- queries ---------------------------------------------------------

    def in_bounds(self, state: Point) -> bool:
        return self.bounds.contains(state[0], state[1])

    def in_goal(self, state: Point) -> bool:
        return self.goal.contains(state[0], state[1])

    def state_in_obstacle(self, state: Point) -> bool:
        return kernels.point_in_rects(state[0], state[1], self.obstacle_rows)

    def drift_at(self, state: Point) -> float:
        return kernels.drift_at(
            state[0], state[1], self.drift_rows, self.default_drift
        )

    def segment_collides(self, a: Point, b: Point) -> bool:
        """True if segment a-b touches any obstacle (closed-set convention)."""
        return kernels.segment_collides(a[0], a[1], b[0], b[1], self.obstacle_rows)

    def first_contact(self, a: Point, b: Point) -> Point | None:
        """First blocking contact point on the motion a->b, or None if free."""
        t = kernels.first_hit_param(a[0], a[1], b[0], b[1], self.obstacle_rows)
        if t < 0.0:
            return None
        return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))

    def clamp(self, state: Point) -> Point:
        x = min(max(state[0], self.bounds.xmin), self.bounds.xmax)
        y = min(max(state[1], self.bounds.ymin), self.bounds.ymax)
        return (x, y)

    # -- dynamics ---------------------------------------------------------

    def _check_control(self, control: Point) -> None:
        if abs(control[0]) > self.control_bound or abs(control[1]) > self.control_bound:
            raise InvalidControlError(
                f"control {control} exceeds bound {self.control_bound}"
            )

    def nominal_step(self, state: Point, control: Point) -> Point:
        """Planner model: duration-scaled step, clamped to the workspace."""
        self._check_control(control)
        return self.clamp(
            (
                state[0] + self.control_duration * control[0],
                state[1] + self.control_duration * control[1],
            )
        )

    def true_step_contact(self, state: Point, control: Point) -> tuple[Point, bool]:
        """Executed dynamics, also reporting whether the motion hit an obstacle.

        The motion is swept from the current state to the drifted target; if it
        would touch an obstacle the robot stops at the contact point (backed off
        by ``CONTACT_BACKOFF`` along the motion so the result stays in free
        space) and the contact flag is set. Otherwise the target is clamped to
        the workspace, i.e. walls also stop the motion (without a contact flag).
        """
        self._check_control(control)
        delta = self.drift_at(state)
        tx = state[0] + self.control_duration * control[0] + delta
        ty = state[1] + self.control_duration * control[1]
        t = kernels.first_hit_param(state[0], state[1], tx, ty, self.obstacle_rows)
        if t < 0.0:
            return self.clamp((tx, ty)), False
        dx = tx - state[0]
        dy = ty - state[1]
        length = math.hypot(dx, dy)
        if length > 0.0:
            back = min(t, CONTACT_BACKOFF / length)
            t -= back
        return self.clamp((state[0] + t * dx, state[1] + t * dy)), True

    def true_step(self, state: Point, control: Point) -> Point:
        """Executed dynamics: nominal step plus rightward drift, stopping on contact."""
        return self.true_step_contact(state, control)[0]
