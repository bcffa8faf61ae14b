"""Adaptive kinodynamic replanning testbed.

A 2D simulation harness around a sampling-based kinodynamic planner whose
cost function and sampling distribution adapt online from observed execution
errors: executed transitions are labeled as anomalous when their measured
error defies the offline deviation estimate, and future plannings penalize
and undersample transitions with a similar local-environment context.
"""

from .context import GridSpec, context_vector, similarity
from .cost import CostModel
from .deviation import (
    AnomalyConfig,
    ExecutedTransition,
    Transition,
    analytic_mde,
    execution_error,
    label_transitions,
    make_transition,
)
from .executor import EpisodeOutcome, ExecutionConfig, run_episode
from .harness import (
    BatchReport,
    Scenario,
    ScenarioError,
    builtin_scenario_path,
    load_scenario,
    run_batch,
)
from .planner import (
    VARIANT_ORDER,
    VARIANTS,
    PlannerConfig,
    PlanningFailureError,
    SamplerState,
    apply_variant,
    cluster_transitions,
    extend,
    get_variant,
    init_arm_rewards,
    plan,
    poison_rewards,
)
from .render import render_svg
from .world import DriftRegion, InvalidControlError, Rect, World

__version__ = "0.1.0"

__all__ = [
    "AnomalyConfig",
    "BatchReport",
    "CostModel",
    "DriftRegion",
    "EpisodeOutcome",
    "ExecutedTransition",
    "ExecutionConfig",
    "GridSpec",
    "InvalidControlError",
    "PlannerConfig",
    "PlanningFailureError",
    "Rect",
    "SamplerState",
    "Scenario",
    "ScenarioError",
    "Transition",
    "VARIANTS",
    "VARIANT_ORDER",
    "World",
    "analytic_mde",
    "apply_variant",
    "builtin_scenario_path",
    "cluster_transitions",
    "context_vector",
    "execution_error",
    "extend",
    "get_variant",
    "init_arm_rewards",
    "label_transitions",
    "load_scenario",
    "make_transition",
    "plan",
    "poison_rewards",
    "render_svg",
    "run_batch",
    "run_episode",
    "similarity",
]
