"""Local-environment context of a transition and context similarity.

A transition's context is a fixed-size vector: one binary occupancy entry per
point of a local grid centered at the transition's state, plus the model
deviation estimate as the last entry. Two transitions are deemed similar when
their context vectors are close, regardless of how far apart they are in the
state-and-action space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .world import World


@dataclass(frozen=True)
class GridSpec:
    """Local occupancy grid: odd width/height, uniform spacing."""

    width: int = 5
    height: int = 5
    resolution: float = 0.05

    def __post_init__(self):
        if self.width < 1 or self.width % 2 == 0:
            raise ValueError(f"grid width must be odd and >= 1, got {self.width}")
        if self.height < 1 or self.height % 2 == 0:
            raise ValueError(f"grid height must be odd and >= 1, got {self.height}")
        if not (math.isfinite(self.resolution) and self.resolution > 0.0):
            raise ValueError(f"grid resolution must be > 0, got {self.resolution}")

    @property
    def size(self) -> int:
        """Number of occupancy entries (the context vector has size + 1)."""
        return self.width * self.height

    @cached_property
    def offsets(self) -> np.ndarray:
        """Grid-point offsets relative to the center, shape (size, 2).

        Row-major from the min corner: entry 0 is the most-negative (x, y)
        corner, x varies fastest. The ordering is part of the context-vector
        contract, so contexts are reproducible bit for bit.
        """
        half_w = self.width // 2
        half_h = self.height // 2
        out = np.empty((self.size, 2), dtype=np.float64)
        i = 0
        for row in range(self.height):
            for col in range(self.width):
                out[i, 0] = (col - half_w) * self.resolution
                out[i, 1] = (row - half_h) * self.resolution
                i += 1
        out.setflags(write=False)
        return out


def context_vector(
    world: World, grid: GridSpec, state: tuple[float, float], mde_value: float
) -> np.ndarray:
    """Context of a transition starting at ``state`` with the given deviation estimate.

    The grid is axis-aligned at the state (the point robot has no
    orientation). Grid points inside an obstacle, or outside the world bounds,
    are marked occupied; the deviation estimate is appended as the last entry.
    Only the state and the estimate enter the vector, never the control.
    """
    if mde_value < 0.0 or not math.isfinite(mde_value):
        raise ValueError(f"mde value must be finite and >= 0, got {mde_value}")
    out = np.empty(grid.size + 1, dtype=np.float64)
    kernels.occupancy(
        state[0],
        state[1],
        grid.offsets,
        world.obstacle_rows,
        world.bounds.xmin,
        world.bounds.ymin,
        world.bounds.xmax,
        world.bounds.ymax,
        out[: grid.size],
    )
    out[grid.size] = mde_value
    return out


def context_distance(za: np.ndarray, zb: np.ndarray) -> float:
    """Euclidean distance between two context vectors."""
    if za.shape != zb.shape:
        raise ValueError(f"context length mismatch: {za.shape} vs {zb.shape}")
    return float(np.linalg.norm(za - zb))


def similarity(za: np.ndarray, zb: np.ndarray) -> float:
    """Similarity exp(-0.5 * ||za - zb||), in (0, 1]; 1 iff the vectors are equal."""
    return math.exp(-0.5 * context_distance(za, zb))
