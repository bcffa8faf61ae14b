"""Model deviation estimate, measured execution errors, and anomaly labels.

The planner works with an offline scalar estimate of how far the true one-step
dynamics deviate from the nominal model. After execution, each transition
carries its measured error; transitions whose error the estimate failed to
predict get flagged as anomalous by a z-score test on the residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .context import GridSpec, context_vector
from .world import Point, World


def analytic_mde(world: World, state: Point, control: Point) -> float:
    """Deviation estimate for the 2D drift world: the drift magnitude at the state.

    This is the default estimator; any callable with the same signature can be
    plugged into the planner and executor instead.
    """
    return world.drift_at(state)


def execution_error(pred: Point, meas: Point) -> float:
    """Euclidean distance between the predicted and the measured successor."""
    return math.hypot(meas[0] - pred[0], meas[1] - pred[1])


@dataclass
class Transition:
    """A simulated state-control pair with its nominal successor and context."""

    x: Point
    u: Point
    x_pred: Point
    context: np.ndarray
    mde: float


@dataclass
class ExecutedTransition:
    """A transition that was run on the true system.

    ``label`` is 1 for transitions whose measured error was anomalously larger
    than the deviation estimate; it is assigned by :func:`label_transitions`
    and defaults to 0 until then.
    """

    x: Point
    u: Point
    x_pred: Point
    x_meas: Point
    error: float
    mde: float
    context: np.ndarray
    label: int = 0


def make_transition(
    world: World,
    grid: GridSpec,
    state: Point,
    control: Point,
    mde_fn=analytic_mde,
) -> Transition:
    """Build a transition with its nominal successor, deviation estimate, and context."""
    mde_value = mde_fn(world, state, control)
    return Transition(
        x=state,
        u=control,
        x_pred=world.nominal_step(state, control),
        context=context_vector(world, grid, state, mde_value),
        mde=mde_value,
    )


@dataclass(frozen=True)
class AnomalyConfig:
    """Z-score anomaly detector settings.

    ``threshold_mode='quantile'`` reads ``confidence`` as a standard-normal
    confidence level (0.95 -> cutoff ~1.6449 on the standardized residual);
    ``'raw'`` uses ``confidence`` directly as the z cutoff. ``min_std`` guards
    against labeling pure floating-point noise when all residuals are equal up
    to roundoff.
    """

    confidence: float = 0.95
    threshold_mode: str = "quantile"
    min_samples: int = 3
    min_std: float = 1e-9

    def __post_init__(self):
        if self.threshold_mode not in ("quantile", "raw"):
            raise ValueError(
                f"threshold_mode must be 'quantile' or 'raw', got {self.threshold_mode!r}"
            )
        if self.threshold_mode == "quantile" and not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")
        if self.min_samples < 1:
            raise ValueError(f"min_samples must be >= 1, got {self.min_samples}")

    @property
    def threshold(self) -> float:
        if self.threshold_mode == "quantile":
            return NormalDist().inv_cdf(self.confidence)
        return self.confidence


def label_transitions(
    executed: list[ExecutedTransition], config: AnomalyConfig = AnomalyConfig()
) -> int:
    """Assign anomaly labels over the whole executed set; returns the anomaly count.

    The statistic is the residual error - mde (how much the estimate
    under-predicted), standardized over all executed transitions. Labels are
    one-sided: only under-predicted errors count, over-prediction is
    conservative and harmless. With fewer than ``min_samples`` transitions or
    a degenerate spread, everything is labeled nominal. Relabeling a fixed set
    is idempotent and independent of input order.
    """
    m = len(executed)
    if m == 0:
        return 0
    residuals = np.array([t.error - t.mde for t in executed], dtype=np.float64)
    if m < config.min_samples:
        for t in executed:
            t.label = 0
        return 0
    mean = float(residuals.mean())
    std = float(residuals.std())
    if std <= config.min_std:
        for t in executed:
            t.label = 0
        return 0
    threshold = config.threshold
    count = 0
    for t, r in zip(executed, residuals):
        t.label = 1 if (r - mean) / std > threshold else 0
        count += t.label
    return count
