"""Adaptive transition cost built from executed-transition evidence.

The cost of a transition is

    cost = mde + P_anomaly * C + (1 - P_anomaly) * e_hat

where ``mde`` is the offline deviation estimate, ``P_anomaly`` estimates the
probability that the transition would be anomalous if executed (by chaining
context similarities to previously executed transitions in descending order),
``e_hat`` is the similarity-weighted mean of previously observed errors, and
``C`` is a fixed penalty that discourages anomalous transitions. With an
empty store the cost reduces exactly to the deviation estimate, so the first
planning of an episode minimizes pure mde.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .deviation import ExecutedTransition, Transition

DEFAULT_PENALTY = 10.0


class CostModel:
    """Transition cost over a snapshot of the executed-transition store.

    The snapshot is taken at construction; the executor rebuilds the model
    between replannings, which is the only time the store changes. Within one
    planning the model is read-only and safe to query concurrently.

    ``adaptive=False`` (the non-adaptive planner variants) makes ``cost``
    return the bare deviation estimate while keeping ``p_anomaly`` and
    ``e_hat`` queryable.
    """

    def __init__(
        self,
        executed: list[ExecutedTransition] = (),
        penalty: float = DEFAULT_PENALTY,
        adaptive: bool = True,
    ):
        if penalty <= 0.0:
            raise ValueError(f"penalty must be > 0, got {penalty}")
        self.penalty = float(penalty)
        self.adaptive = bool(adaptive)
        self.executed = list(executed)
        m = len(self.executed)
        width = self.executed[0].context.shape[0] if m else 0
        self._contexts = np.empty((m, width), dtype=np.float64)
        self._errors = np.empty(m, dtype=np.float64)
        self._labels = np.empty(m, dtype=np.float64)
        for i, t in enumerate(self.executed):
            self._contexts[i] = t.context
            self._errors[i] = t.error
            self._labels[i] = t.label

    def __len__(self) -> int:
        return len(self.executed)

    def _terms(self, tau: Transition) -> tuple[float, float]:
        return kernels.cost_terms(tau.context, self._contexts, self._errors, self._labels)

    def p_anomaly(self, tau: Transition) -> float:
        """Probability estimate in [0, 1] that ``tau`` would execute anomalously."""
        return self._terms(tau)[0]

    def e_hat(self, tau: Transition) -> float:
        """Similarity-weighted mean of the observed execution errors (0 if no store)."""
        return self._terms(tau)[1]

    def cost(self, tau: Transition) -> float:
        if not self.adaptive or not self.executed:
            return tau.mde
        p, e = self._terms(tau)
        return tau.mde + p * self.penalty + (1.0 - p) * e

    def evaluate(self, tau: Transition) -> tuple[float, float, float]:
        """(p_anomaly, e_hat, cost) in one store pass."""
        p, e = self._terms(tau)
        if not self.adaptive or not self.executed:
            return p, e, tau.mde
        return p, e, tau.mde + p * self.penalty + (1.0 - p) * e
