"""Replan-and-execute loop with safety stop and online adaptation.

An episode repeatedly plans from the current measured state and executes the
plan one control at a time on the true dynamics, while rolling the nominal
model forward in parallel. Execution halts as soon as the measured state
deviates from the nominal rollout by at least the safety threshold. Between
plannings the executed transitions are labeled, the cost model is rebuilt,
and the sampler rewards are refreshed, so each replanning sees the newest
evidence. The episode fails once the replanning budget is exhausted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .context import GridSpec, context_vector
from .cost import CostModel
from .deviation import (
    AnomalyConfig,
    ExecutedTransition,
    analytic_mde,
    execution_error,
    label_transitions,
)
from .planner import (
    PlannerConfig,
    PlanningFailureError,
    SamplerState,
    apply_variant,
    get_variant,
    plan,
)
from .world import Point, World

DEFAULT_SAFETY_THRESHOLD = 0.05
DEFAULT_MAX_REPLANNINGS = 10


@dataclass(frozen=True)
class ExecutionConfig:
    """Episode-level settings for the replan-and-execute loop.

    ``count_failed_plans`` controls whether a planning call that finds no
    solution still consumes replanning budget (it does by default).
    """

    safety_threshold: float = DEFAULT_SAFETY_THRESHOLD
    max_replannings: int = DEFAULT_MAX_REPLANNINGS
    count_failed_plans: bool = True

    def __post_init__(self):
        if self.safety_threshold <= 0.0:
            raise ValueError("safety_threshold must be > 0")
        if self.max_replannings < 0:
            raise ValueError("max_replannings must be >= 0")


@dataclass
class StepRecord:
    """One executed control: measured outcome, nominal rollout, and stop flag."""

    plan_index: int
    step_index: int
    x: Point  # state before the step
    u: Point
    x_pred: Point  # one-step nominal prediction from the measured state
    x_meas: Point  # measured successor
    x_hat: Point  # accumulated nominal rollout after the step
    error: float
    mde: float
    deviation: float  # ||x_meas - x_hat|| after the step
    safety_stop: bool


@dataclass
class PlanTrace:
    """One planning call: the chosen rollout plus planner diagnostics."""

    index: int
    start: Point
    controls: list[Point]
    planned_states: list[Point]
    cost: float
    incumbent_costs: list[float]
    arm_pulls: list[list[int]]
    failed: bool = False


@dataclass
class EpisodeOutcome:
    """Result of one episode, with full traces for audits and plots."""

    variant: str
    seed: int
    success: bool
    replannings: int
    planning_failures: int
    safety_stops: int
    final_state: Point
    steps: list[StepRecord] = field(default_factory=list)
    plans: list[PlanTrace] = field(default_factory=list)
    executed: list[ExecutedTransition] = field(default_factory=list)


def run_episode(
    world: World,
    start: Point,
    variant: str,
    seed: int,
    planner_config: PlannerConfig | None = None,
    execution_config: ExecutionConfig = ExecutionConfig(),
    anomaly_config: AnomalyConfig = AnomalyConfig(),
    grid: GridSpec = GridSpec(),
    penalty: float = 10.0,
    mde_fn=analytic_mde,
) -> EpisodeOutcome:
    """Run one replan-and-execute episode and return its outcome.

    ``replannings`` counts planning calls beyond the initial one; the episode
    fails when reaching the goal would require more than ``1 +
    max_replannings`` calls. The executed-transition store persists across
    replannings within the episode and is discarded afterwards.
    """
    if not world.in_bounds(start):
        raise ValueError(f"start state {start} is outside the world bounds")
    if world.state_in_obstacle(start):
        raise ValueError(f"start state {start} is inside an obstacle")
    pcfg = planner_config if planner_config is not None else PlannerConfig(variant=variant)
    v = get_variant(variant)

    rng = np.random.default_rng(seed)
    sampler = SamplerState(
        threshold=pcfg.cluster_threshold,
        sample_size=pcfg.cluster_sample_size,
        poisoning=v.adapt_bias,
    )
    executed: list[ExecutedTransition] = []
    steps: list[StepRecord] = []
    plans: list[PlanTrace] = []

    x = start
    plan_calls = 0
    planning_failures = 0
    safety_stops = 0
    budget = 1 + execution_config.max_replannings

    while not world.in_goal(x):
        if plan_calls >= budget:
            break
        cost_model = CostModel(executed, penalty=penalty, adaptive=v.adapt_cost)
        apply_variant(v, cost_model, sampler)
        plan_index = len(plans)
        try:
            result = plan(world, x, pcfg, cost_model, sampler, rng, grid, mde_fn)
        except PlanningFailureError:
            planning_failures += 1
            if execution_config.count_failed_plans:
                plan_calls += 1
            plans.append(
                PlanTrace(
                    index=plan_index,
                    start=x,
                    controls=[],
                    planned_states=[x],
                    cost=math.inf,
                    incumbent_costs=[],
                    arm_pulls=[],
                    failed=True,
                )
            )
            continue
        plan_calls += 1
        plans.append(
            PlanTrace(
                index=plan_index,
                start=x,
                controls=result.controls,
                planned_states=result.states,
                cost=result.cost,
                incumbent_costs=result.incumbent_costs,
                arm_pulls=result.arm_pulls,
            )
        )

        # The deviation monitor restarts from the measured state at every
        # replanning; the plan itself restarts from there too. An obstacle
        # contact puts the robot in a protective stop: it holds its position
        # for the rest of the plan while the nominal rollout keeps advancing,
        # so the safety break fires within a couple of steps.
        x_hat = x
        halted = False
        for step_index, u in enumerate(result.controls):
            mde_value = mde_fn(world, x, u)
            x_pred = world.nominal_step(x, u)
            if halted:
                x_meas = x
            else:
                x_meas, contact = world.true_step_contact(x, u)
                halted = contact
            x_hat = world.nominal_step(x_hat, u)
            err = execution_error(x_pred, x_meas)
            executed.append(
                ExecutedTransition(
                    x=x,
                    u=u,
                    x_pred=x_pred,
                    x_meas=x_meas,
                    error=err,
                    mde=mde_value,
                    context=context_vector(world, grid, x, mde_value),
                )
            )
            x = x_meas
            deviation = math.hypot(x[0] - x_hat[0], x[1] - x_hat[1])
            stop = deviation >= execution_config.safety_threshold
            steps.append(
                StepRecord(
                    plan_index=plan_index,
                    step_index=step_index,
                    x=executed[-1].x,
                    u=u,
                    x_pred=x_pred,
                    x_meas=x_meas,
                    x_hat=x_hat,
                    error=err,
                    mde=mde_value,
                    deviation=deviation,
                    safety_stop=stop,
                )
            )
            if stop:
                safety_stops += 1
                break

        label_transitions(executed, anomaly_config)
        sampler.refresh_rewards(executed)

    success = world.in_goal(x)
    return EpisodeOutcome(
        variant=get_variant(variant).name,
        seed=seed,
        success=success,
        replannings=max(0, plan_calls - 1),
        planning_failures=planning_failures,
        safety_stops=safety_stops,
        final_state=x,
        steps=steps,
        plans=plans,
        executed=executed,
    )
