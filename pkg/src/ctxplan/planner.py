"""Kinodynamic RRT with bandit-biased sampling over context clusters.

One planning call runs several RRT instances back to back. Transitions
simulated during the runs are grouped by context into clusters; the clusters
become arms of a UCB1 bandit that decides, extension by extension, whether the
next sample comes from the uniform distribution or from the neighborhood of a
cluster. Arm rewards start from the clusters' mean deviation estimate and are
scaled down ("poisoned") for clusters whose predicted members executed
anomalously, so unreliable regions get undersampled on top of being penalized
by the cost function.

All four ablation variants live here; they differ only in whether the cost
adapts and whether the rewards are poisoned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .context import GridSpec
from .cost import CostModel
from .deviation import ExecutedTransition, Transition, analytic_mde, make_transition
from .world import Point, World


class PlanningFailureError(RuntimeError):
    """No collision-free control sequence to the goal within the iteration budget."""


@dataclass(frozen=True)
class Variant:
    """Which of the two adaptation mechanisms a planner variant enables."""

    name: str
    adapt_cost: bool
    adapt_bias: bool


VARIANTS = {
    "mab-rrt": Variant("MAB-RRT", adapt_cost=False, adapt_bias=False),
    "ctx-rrt-static-cost": Variant("CTX-RRT-static-cost", adapt_cost=False, adapt_bias=True),
    "ctx-rrt-static-bias": Variant("CTX-RRT-static-bias", adapt_cost=True, adapt_bias=False),
    "ctx-rrt": Variant("CTX-RRT", adapt_cost=True, adapt_bias=True),
}

# Canonical reporting order.
VARIANT_ORDER = ["mab-rrt", "ctx-rrt-static-cost", "ctx-rrt-static-bias", "ctx-rrt"]


def get_variant(name: str) -> Variant:
    key = name.strip().lower()
    if key not in VARIANTS:
        raise ValueError(f"unknown planner variant {name!r}; expected one of {sorted(VARIANTS)}")
    return VARIANTS[key]


@dataclass
class PlannerConfig:
    variant: str = "ctx-rrt"
    max_iterations: int = 2000
    runs_per_planning: int = 4
    goal_bias: float = 0.05
    controls_per_extension: int = 10
    cluster_threshold: float = 0.1
    cluster_sample_size: int = 300

    def __post_init__(self):
        get_variant(self.variant)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.runs_per_planning < 1:
            raise ValueError("runs_per_planning must be >= 1")
        if not 0.0 <= self.goal_bias < 1.0:
            raise ValueError("goal_bias must be in [0, 1)")
        if self.controls_per_extension < 1:
            raise ValueError("controls_per_extension must be >= 1")
        if self.cluster_threshold <= 0.0:
            raise ValueError("cluster_threshold must be > 0")
        if self.cluster_sample_size < 1:
            raise ValueError("cluster_sample_size must be >= 1")


class Tree:
    """Flat-array RRT tree; nearest-neighbor queries run in the kernel backend."""

    def __init__(self, root: Point, capacity: int):
        cap = max(1, capacity)
        self.xs = np.empty(cap, dtype=np.float64)
        self.ys = np.empty(cap, dtype=np.float64)
        self.parent = np.empty(cap, dtype=np.int64)
        self.ux = np.empty(cap, dtype=np.float64)
        self.uy = np.empty(cap, dtype=np.float64)
        self.edge_cost = np.empty(cap, dtype=np.float64)
        self.cost_to_come = np.empty(cap, dtype=np.float64)
        self.size = 1
        self.xs[0], self.ys[0] = root
        self.parent[0] = -1
        self.ux[0] = self.uy[0] = 0.0
        self.edge_cost[0] = 0.0
        self.cost_to_come[0] = 0.0

    def state(self, idx: int) -> Point:
        return (float(self.xs[idx]), float(self.ys[idx]))

    def nearest(self, target: Point) -> int:
        return kernels.nearest_index(self.xs, self.ys, self.size, target[0], target[1])

    def add(self, parent: int, state: Point, control: Point, edge_cost: float) -> int:
        idx = self.size
        self.xs[idx], self.ys[idx] = state
        self.parent[idx] = parent
        self.ux[idx], self.uy[idx] = control
        self.edge_cost[idx] = edge_cost
        self.cost_to_come[idx] = self.cost_to_come[parent] + edge_cost
        self.size += 1
        return idx

    def path_to(self, idx: int) -> tuple[list[Point], list[float]]:
        """Controls and per-edge costs from the root to ``idx``."""
        controls: list[Point] = []
        costs: list[float] = []
        node = idx
        while self.parent[node] >= 0:
            controls.append((float(self.ux[node]), float(self.uy[node])))
            costs.append(float(self.edge_cost[node]))
            node = int(self.parent[node])
        controls.reverse()
        costs.reverse()
        return controls, costs


# -- context clustering and arm rewards -----------------------------------


@dataclass
class Cluster:
    """A context cluster acting as one bandit arm.

    ``base_reward`` is the negated mean deviation estimate of the members;
    ``reward`` is the same value after poisoning (``reward = base_reward *
    poison_factor``). MAB statistics (pulls, cumulative reward) are tracked by
    the sampler per run.
    """

    contexts: np.ndarray  # (m, F+1) member contexts
    states: np.ndarray  # (m, 2) member start states
    mdes: np.ndarray  # (m,) member deviation estimates
    medoid: np.ndarray  # (F+1,) one of the member contexts
    base_reward: float = 0.0
    reward: float = 0.0
    poison_factor: float = 1.0

    def __len__(self) -> int:
        return self.contexts.shape[0]


def cluster_transitions(
    contexts: np.ndarray,
    states: np.ndarray,
    mdes: np.ndarray,
    threshold: float,
) -> list[Cluster]:
    """Greedy agglomerative clustering of transitions by context distance.

    Each transition joins the cluster whose medoid is nearest if that distance
    is within ``threshold``, else it founds a new cluster. The medoid (the
    member minimizing the summed distance to all other members) is recomputed
    incrementally on every join. Empty input yields an empty list.
    """
    n = contexts.shape[0]
    if n == 0:
        return []
    width = contexts.shape[1]
    medoids = np.empty((n, width), dtype=np.float64)
    members: list[list[int]] = []
    dist_sums: list[list[float]] = []
    medoid_idx: list[int] = []

    for i in range(n):
        z = contexts[i]
        joined = False
        h = len(members)
        if h:
            d = np.linalg.norm(medoids[:h] - z, axis=1)
            best = int(np.argmin(d))
            if float(d[best]) <= threshold:
                rows = members[best]
                d_new = np.linalg.norm(contexts[rows] - z, axis=1)
                sums = dist_sums[best]
                for k, inc in enumerate(d_new):
                    sums[k] += float(inc)
                sums.append(float(d_new.sum()))
                rows.append(i)
                med = int(np.argmin(sums))
                medoid_idx[best] = rows[med]
                medoids[best] = contexts[rows[med]]
                joined = True
        if not joined:
            members.append([i])
            dist_sums.append([0.0])
            medoid_idx.append(i)
            medoids[h] = z

    clusters = []
    for rows, med in zip(members, medoid_idx):
        idx = np.array(rows, dtype=np.intp)
        clusters.append(
            Cluster(
                contexts=np.ascontiguousarray(contexts[idx]),
                states=np.ascontiguousarray(states[idx]),
                mdes=np.ascontiguousarray(mdes[idx]),
                medoid=contexts[med].copy(),
            )
        )
    return clusters


def init_arm_rewards(clusters: list[Cluster]) -> None:
    """Set each cluster's initial reward to the negated mean deviation of its members.

    Also resets any previous poisoning; apply :func:`poison_rewards` afterwards.
    """
    for c in clusters:
        c.base_reward = -float(c.mdes.mean())
        c.reward = c.base_reward
        c.poison_factor = 1.0


def poison_rewards(
    clusters: list[Cluster],
    executed: list[ExecutedTransition],
    threshold: float,
) -> None:
    """Scale cluster rewards by the fraction of predicted members that were nominal.

    An executed transition is predicted to belong to the cluster whose medoid
    is nearest to its context, provided that distance is within ``threshold``.
    A cluster with ``a`` anomalous out of ``p`` predicted members keeps
    ``reward * (1 - a / p)``; clusters with no predicted members are left
    unchanged. Call after :func:`init_arm_rewards` (factors do not compound).
    """
    if not clusters or not executed:
        return
    medoids = np.stack([c.medoid for c in clusters])
    predicted = np.zeros(len(clusters), dtype=np.int64)
    anomalous = np.zeros(len(clusters), dtype=np.int64)
    for t in executed:
        d = np.linalg.norm(medoids - t.context, axis=1)
        best = int(np.argmin(d))
        if float(d[best]) <= threshold:
            predicted[best] += 1
            if t.label:
                anomalous[best] += 1
    for i, c in enumerate(clusters):
        if predicted[i] > 0:
            c.poison_factor = 1.0 - anomalous[i] / predicted[i]
            c.reward = c.base_reward * c.poison_factor


# -- bandit sampler --------------------------------------------------------


UNIFORM_ARM_PRIOR = 0.5


class SamplerState:
    """UCB1 bandit over the uniform arm (id 0) and one arm per context cluster.

    Arm values are ``poison_factor * mean_reward + sqrt(2 ln N / n)`` where the
    mean includes the arm's prior as one pseudo-observation. Priors come from
    min-max normalizing the clusters' un-poisoned rewards across arms and then
    applying each cluster's poison factor, so a fully anomalous cluster starts
    at zero; normalizing before the poison scaling keeps "reward closer to
    zero" from reading as "better" when raw rewards are negative.

    Clusters persist across plannings within an episode; the pool of simulated
    transitions they are rebuilt from resets at the start of each planning.
    """

    def __init__(self, threshold: float, sample_size: int, poisoning: bool = True):
        self.threshold = float(threshold)
        self.sample_size = int(sample_size)
        self.poisoning = bool(poisoning)
        self.clusters: list[Cluster] = []
        self._pool_contexts: list[np.ndarray] = []
        self._pool_states: list[Point] = []
        self._pool_mdes: list[float] = []
        self._pending_arm: int | None = None
        self._cost_min = math.inf
        self._cost_max = -math.inf
        self._reset_arms()

    # arm bookkeeping -----------------------------------------------------

    def _reset_arms(self) -> None:
        n = 1 + len(self.clusters)
        self._priors = np.full(n, UNIFORM_ARM_PRIOR, dtype=np.float64)
        self._factors = np.ones(n, dtype=np.float64)
        self._pulls = np.zeros(n, dtype=np.int64)
        self._reward_sums = np.zeros(n, dtype=np.float64)
        if self.clusters:
            base = np.array([c.base_reward for c in self.clusters], dtype=np.float64)
            span = float(base.max() - base.min())
            if span > 0.0:
                norm = (base - base.min()) / span
            else:
                norm = np.full(len(self.clusters), UNIFORM_ARM_PRIOR)
            for i, c in enumerate(self.clusters):
                self._priors[1 + i] = norm[i] * c.poison_factor
                self._factors[1 + i] = c.poison_factor

    @property
    def num_arms(self) -> int:
        return 1 + len(self.clusters)

    def pull_counts(self) -> list[int]:
        return self._pulls.tolist()

    # episode/planning lifecycle -----------------------------------------

    def begin_planning(self) -> None:
        """Clear the transition pool and the reward normalization for a new planning."""
        self._pool_contexts.clear()
        self._pool_states.clear()
        self._pool_mdes.clear()
        self._cost_min = math.inf
        self._cost_max = -math.inf

    def add_transition(self, tau: Transition) -> None:
        self._pool_contexts.append(tau.context)
        self._pool_states.append(tau.x)
        self._pool_mdes.append(tau.mde)

    def refresh_rewards(self, executed: list[ExecutedTransition]) -> None:
        """Re-derive cluster rewards from scratch and rebuild the arm statistics.

        Re-initializes rewards before poisoning so repeated refreshes (between
        replannings and at run boundaries) never compound the poison factors.
        """
        init_arm_rewards(self.clusters)
        if self.poisoning and executed:
            poison_rewards(self.clusters, executed, self.threshold)
        self._reset_arms()

    def rebuild_clusters(
        self, executed: list[ExecutedTransition], rng: np.random.Generator
    ) -> None:
        """Recluster the accumulated transitions and refresh the arm rewards.

        At most ``sample_size`` pool entries are clustered (a seeded subsample
        keeps the cost bounded). An empty pool leaves the clusters unchanged.
        """
        n = len(self._pool_contexts)
        if n == 0:
            self.refresh_rewards(executed)
            return
        if n > self.sample_size:
            chosen = rng.choice(n, size=self.sample_size, replace=False)
        else:
            chosen = np.arange(n)
        contexts = np.stack([self._pool_contexts[i] for i in chosen])
        states = np.array([self._pool_states[i] for i in chosen], dtype=np.float64)
        mdes = np.array([self._pool_mdes[i] for i in chosen], dtype=np.float64)
        self.clusters = cluster_transitions(contexts, states, mdes, self.threshold)
        self.refresh_rewards(executed)

    # sampling ------------------------------------------------------------

    def select_arm(self) -> int:
        """UCB1 choice; unpulled arms go first in id order."""
        for i in range(self.num_arms):
            if self._pulls[i] == 0:
                self._pending_arm = i
                return i
        total = float(self._pulls.sum())
        means = (self._priors + self._reward_sums) / (1.0 + self._pulls)
        values = self._factors * means + np.sqrt(2.0 * math.log(total) / self._pulls)
        arm = int(np.argmax(values))
        self._pending_arm = arm
        return arm

    def draw(self, world: World, rng: np.random.Generator, goal_bias: float) -> Point:
        """Sample a target state from the pending arm."""
        arm = self._pending_arm
        if arm is None:
            raise RuntimeError("select_arm must be called before draw")
        if arm == 0:
            if rng.random() < goal_bias:
                g = world.goal
                return (
                    float(rng.uniform(g.xmin, g.xmax)),
                    float(rng.uniform(g.ymin, g.ymax)),
                )
            b = world.bounds
            return (
                float(rng.uniform(b.xmin, b.xmax)),
                float(rng.uniform(b.ymin, b.ymax)),
            )
        cluster = self.clusters[arm - 1]
        member = int(rng.integers(len(cluster)))
        noise = rng.normal(0.0, self.threshold, size=2)
        return world.clamp(
            (
                float(cluster.states[member, 0] + noise[0]),
                float(cluster.states[member, 1] + noise[1]),
            )
        )

    def record_result(self, cost: float | None) -> None:
        """Credit the pending arm: normalized negated cost, or 0 for a failed extension."""
        arm = self._pending_arm
        if arm is None:
            raise RuntimeError("select_arm must be called before record_result")
        self._pending_arm = None
        self._pulls[arm] += 1
        if cost is None:
            return
        if cost < self._cost_min:
            self._cost_min = cost
        if cost > self._cost_max:
            self._cost_max = cost
        span = self._cost_max - self._cost_min
        if span > 0.0:
            reward = (self._cost_max - cost) / span
        else:
            reward = 0.5
        self._reward_sums[arm] += reward


def apply_variant(variant: str | Variant, cost_model: CostModel, sampler: SamplerState) -> Variant:
    """Configure the two adaptation switches for the given planner variant."""
    v = variant if isinstance(variant, Variant) else get_variant(variant)
    cost_model.adaptive = v.adapt_cost
    sampler.poisoning = v.adapt_bias
    return v


# -- RRT machinery ---------------------------------------------------------


def extend(
    tree: Tree,
    target: Point,
    k: int,
    cost_model: CostModel,
    world: World,
    grid: GridSpec,
    rng: np.random.Generator,
    mde_fn=analytic_mde,
) -> tuple[int, Transition, float] | None:
    """Grow the tree toward ``target`` with the best of ``k`` sampled controls.

    From the node nearest to the target, each sampled control is propagated
    with the nominal dynamics; colliding segments are discarded and the
    survivor landing closest to the target becomes a child whose edge cost is
    the transition cost. Returns (node index, transition, cost), or None when
    every propagation collides.
    """
    near = tree.nearest(target)
    nx, ny = tree.state(near)
    bound = world.control_bound
    controls = rng.uniform(-bound, bound, size=(k, 2))
    b = world.bounds
    best = kernels.best_extension(
        nx,
        ny,
        target[0],
        target[1],
        controls,
        world.control_duration,
        b.xmin,
        b.ymin,
        b.xmax,
        b.ymax,
        world.obstacle_rows,
    )
    if best < 0:
        return None
    control = (float(controls[best, 0]), float(controls[best, 1]))
    tau = make_transition(world, grid, (nx, ny), control, mde_fn)
    edge_cost = cost_model.cost(tau)
    idx = tree.add(near, tau.x_pred, control, edge_cost)
    return idx, tau, edge_cost


@dataclass
class PlanResult:
    """A validated control sequence plus per-planning diagnostics."""

    controls: list[Point]
    states: list[Point]  # nominal rollout, length len(controls) + 1
    edge_costs: list[float]
    cost: float
    incumbent_costs: list[float]  # best-known cost after each RRT run (inf before first solution)
    run_iterations: list[int]
    arm_pulls: list[list[int]]  # pull counts per arm, snapshot at the end of each run


def plan(
    world: World,
    start: Point,
    config: PlannerConfig,
    cost_model: CostModel,
    sampler: SamplerState,
    rng: np.random.Generator,
    grid: GridSpec = GridSpec(),
    mde_fn=analytic_mde,
) -> PlanResult:
    """Run sequential RRT instances and return the best control sequence found.

    After every run the accumulated transitions are reclustered and the arm
    rewards refreshed, so later runs (and the first run of the next planning)
    sample with the updated bias. The returned sequence is re-validated by an
    independent nominal rollout: it must be collision-free and end in the goal.

    Raises :class:`PlanningFailureError` when no run reaches the goal.
    """
    if world.in_goal(start):
        return PlanResult([], [start], [], 0.0, [], [], [])
    if world.state_in_obstacle(start):
        raise PlanningFailureError(f"start state {start} is inside an obstacle")

    sampler.begin_planning()
    best_cost = math.inf
    best_node: int | None = None
    best_tree: Tree | None = None
    incumbents: list[float] = []
    run_iterations: list[int] = []
    arm_pulls: list[list[int]] = []

    for _ in range(config.runs_per_planning):
        tree = Tree(start, capacity=config.max_iterations + 1)
        goal_node = None
        iterations = 0
        for _ in range(config.max_iterations):
            iterations += 1
            sampler.select_arm()
            target = sampler.draw(world, rng, config.goal_bias)
            result = extend(
                tree,
                target,
                config.controls_per_extension,
                cost_model,
                world,
                grid,
                rng,
                mde_fn,
            )
            if result is None:
                sampler.record_result(None)
                continue
            idx, tau, edge_cost = result
            sampler.record_result(edge_cost)
            sampler.add_transition(tau)
            if world.in_goal(tree.state(idx)):
                goal_node = idx
                break
        if goal_node is not None and float(tree.cost_to_come[goal_node]) < best_cost:
            best_cost = float(tree.cost_to_come[goal_node])
            best_node = goal_node
            best_tree = tree
        incumbents.append(best_cost)
        run_iterations.append(iterations)
        arm_pulls.append(sampler.pull_counts())
        sampler.rebuild_clusters(cost_model.executed, rng)

    if best_tree is None or best_node is None:
        raise PlanningFailureError(
            f"no plan from {start} within {config.runs_per_planning} runs of "
            f"{config.max_iterations} iterations"
        )

    controls, edge_costs = best_tree.path_to(best_node)
    states = [start]
    for u in controls:
        nxt = world.nominal_step(states[-1], u)
        if world.segment_collides(states[-1], nxt):
            raise PlanningFailureError("internal error: returned plan crosses an obstacle")
        states.append(nxt)
    if not world.in_goal(states[-1]):
        raise PlanningFailureError("internal error: returned plan does not reach the goal")
    return PlanResult(
        controls=controls,
        states=states,
        edge_costs=edge_costs,
        cost=best_cost,
        incumbent_costs=incumbents,
        run_iterations=run_iterations,
        arm_pulls=arm_pulls,
    )
