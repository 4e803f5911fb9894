"""High-level K-CBS: best-first constraint-tree search with retry nodes and merge-and-restart."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import random
import time
from dataclasses import dataclass, field
from typing import Sequence

from kinocbs.conflicts import Constraint, Plan, make_constraints, validate_plan
from kinocbs.dynamics import RobotModel, merge_models
from kinocbs.low_level import Environment, MotionTree, PlannerSettings, Solution, cstr_plan
from kinocbs.trajectory import Trajectory, split_trajectory

log = logging.getLogger(__name__)

SOLVED = "solved"
TIMEOUT = "timeout"
ROOT_FAILED = "root_failed"
EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class SolveConfig:
    iterations: int = 2000
    merge_threshold: int = 10
    dt: float = 0.1
    seed: int = 0
    deadline: float = 60.0
    step: float = 0.05
    goal_bias: float = 0.05
    max_steps: int = 20

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations (N) must be >= 1")
        if self.merge_threshold < 1:
            raise ValueError("merge threshold (B) must be >= 1")
        if self.dt <= 0 or self.deadline <= 0:
            raise ValueError("dt and deadline must be positive")

    @property
    def settings(self) -> PlannerSettings:
        return PlannerSettings(step=self.step, dt=self.dt, goal_bias=self.goal_bias, max_steps=self.max_steps)


def should_merge(counter: "ConflictCounter", i: int, j: int, bound: int) -> bool:
    return counter[i, j] > bound


class ConflictCounter:
    """Symmetric per-pair conflict counts."""

    def __init__(self, k: int):
        self.k = k
        self._counts: dict[tuple[int, int], int] = {}

    @staticmethod
    def _key(i: int, j: int) -> tuple[int, int]:
        if i == j:
            raise ValueError("the diagonal is unused")
        return (i, j) if i < j else (j, i)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        return self._counts.get(self._key(*ij), 0)

    def increment(self, i: int, j: int) -> int:
        key = self._key(i, j)
        self._counts[key] = self._counts.get(key, 0) + 1
        return self._counts[key]

    def items(self):
        return self._counts.items()


@dataclass
class MergeEvent:
    first: tuple[int, ...]
    second: tuple[int, ...]
    restart: int
    count: int


@dataclass
class SolveStats:
    ct_nodes_expanded: int = 0
    low_level_calls: int = 0
    branches: int = 0
    merge_events: list[MergeEvent] = field(default_factory=list)
    wall_time: float = 0.0
    final_robot_count: int = 0
    max_retry: int = 0
    # highest counter value ever reached per pair of original-robot groups
    pair_counts: dict[tuple[tuple[int, ...], tuple[int, ...]], int] = field(default_factory=dict)
    # (popped cost, min cost left in the queue) for every expansion
    pops: list[tuple[float, float]] = field(default_factory=list)
    # (robot count, parent constraint counts, child constraint counts) for each child
    child_checks: list[tuple[int, tuple[int, ...], tuple[int, ...], bool]] = field(default_factory=list)

    @property
    def merges(self) -> int:
        return len(self.merge_events)

    def to_dict(self) -> dict:
        return {
            "ctNodesExpanded": self.ct_nodes_expanded,
            "lowLevelCalls": self.low_level_calls,
            "branches": self.branches,
            "merges": [
                {"first": list(m.first), "second": list(m.second), "restart": m.restart, "count": m.count}
                for m in self.merge_events
            ],
            "wallTime": self.wall_time,
            "finalRobotCount": self.final_robot_count,
            "maxRetry": self.max_retry,
        }


@dataclass
class SolveResult:
    status: str
    plan: Plan | None
    stats: SolveStats
    models: list[RobotModel]
    meta_plan: Plan | None = None

    @property
    def success(self) -> bool:
        return self.status == SOLVED


@dataclass
class CTNode:
    trajectories: tuple[Trajectory | None, ...]
    constraints: tuple[tuple[Constraint, ...], ...]
    pending: int | None = None
    tree: MotionTree | None = None
    retries: int = 0
    depth: int = 0

    @property
    def has_plan(self) -> bool:
        return self.pending is None

    @property
    def cost(self) -> float:
        if self.pending is not None:
            return math.inf
        return math.fsum(t.duration for t in self.trajectories)

    @property
    def plan(self) -> Plan | None:
        return Plan(self.trajectories) if self.pending is None else None


def split_plan(plan: Plan, k: int) -> Plan:
    """Per-original-robot plan from a plan over (possibly merged) models."""
    out: list[Trajectory | None] = [None] * k
    for traj in plan:
        for member, part in zip(traj.model.members, split_trajectory(traj)):
            out[member] = part
    if any(t is None for t in out):
        raise ValueError("plan does not cover every robot")
    return Plan(tuple(out))


class _Restart(Exception):
    def __init__(self, i: int, j: int):
        self.i, self.j = i, j


class _Search:
    def __init__(self, models: list[RobotModel], env: Environment, config: SolveConfig,
                 rng: random.Random, stats: SolveStats, deadline: float, restart: int):
        self.models = models
        self.env = env
        self.config = config
        self.settings = config.settings
        self.rng = rng
        self.stats = stats
        self.deadline = deadline
        self.restart = restart
        self.margins = [self.settings.margin(m) for m in models]
        self.counter = ConflictCounter(len(models))
        self._seq = itertools.count()

    def low_level(self, r: int, constraints, tree=None, iterations=None):
        self.stats.low_level_calls += 1
        return cstr_plan(self.models[r], self.env, constraints, seed_tree=tree,
                         iterations=iterations, deadline=self.deadline, rng=self.rng,
                         settings=self.settings)

    def bump(self, i: int, j: int):
        n = self.counter.increment(i, j)
        a, b = self.models[i].members, self.models[j].members
        key = (a, b) if a < b else (b, a)
        self.stats.pair_counts[key] = max(self.stats.pair_counts.get(key, 0), n)
        if should_merge(self.counter, i, j, self.config.merge_threshold):
            self.stats.merge_events.append(MergeEvent(a, b, self.restart, n))
            raise _Restart(i, j)

    def run(self) -> tuple[str, Plan | None]:
        k = len(self.models)
        root = []
        for r in range(k):
            out = self.low_level(r, ())
            if not isinstance(out, Solution):
                return (TIMEOUT if out.timed_out else ROOT_FAILED), None
            root.append(out.trajectory)
        queue: list = []
        self.push(queue, CTNode(tuple(root), tuple(() for _ in range(k))))

        while queue:
            if time.monotonic() > self.deadline:
                return TIMEOUT, None
            cost, _, node = heapq.heappop(queue)
            rest = queue[0][0] if queue else math.inf
            self.stats.pops.append((cost, rest))
            self.stats.ct_nodes_expanded += 1

            if not node.has_plan:
                self.retry(queue, node)
                continue

            conflicts = validate_plan(node.plan, self.env.obstacles, self.settings.dt, self.margins)
            if not conflicts:
                return SOLVED, node.plan
            first = conflicts[0]
            self.bump(first.i, first.j)
            self.branch(queue, node, first)
        return EXHAUSTED, None

    def push(self, queue, node: CTNode):
        heapq.heappush(queue, (node.cost, next(self._seq), node))

    def retry(self, queue, node: CTNode):
        r = node.pending
        node.retries += 1
        self.stats.max_retry = max(self.stats.max_retry, node.retries)
        out = self.low_level(r, node.constraints[r], node.tree, self.config.iterations)
        if isinstance(out, Solution):
            trajs = list(node.trajectories)
            trajs[r] = out.trajectory
            self.push(queue, CTNode(tuple(trajs), node.constraints, depth=node.depth))
            return
        node.tree = out.tree
        if out.c_max is not None:
            self.bump(r, out.c_max.other)
        if node.retries >= self.config.merge_threshold:
            log.debug("dropping pending node for robot %d after %d retries", r, node.retries)
            return
        self.push(queue, node)

    def branch(self, queue, node: CTNode, conflict):
        self.stats.branches += 1
        pair = make_constraints(conflict, node.plan, self.margins)
        for r, cons in zip((conflict.i, conflict.j), pair):
            sets = list(node.constraints)
            sets[r] = sets[r] + (cons,)
            out = self.low_level(r, sets[r], None, self.config.iterations)
            parent_sizes = tuple(len(s) for s in node.constraints)
            child_sizes = tuple(len(s) for s in sets)
            superset = all(set(map(id, p)) <= set(map(id, c)) for p, c in zip(node.constraints, sets))
            self.stats.child_checks.append((len(sets), parent_sizes, child_sizes, superset))
            if isinstance(out, Solution):
                trajs = list(node.trajectories)
                trajs[r] = out.trajectory
                child = CTNode(tuple(trajs), tuple(sets), depth=node.depth + 1)
            else:
                child = CTNode(node.trajectories, tuple(sets), pending=r, tree=out.tree, depth=node.depth + 1)
            self.push(queue, child)


def solve(models: Sequence[RobotModel], env: Environment, config: SolveConfig | None = None) -> SolveResult:
    """Plan collision-free trajectories for every robot with K-CBS.

    On success ``result.plan`` holds one trajectory per input robot (meta-robot
    trajectories are split back) and ``result.meta_plan`` the plan over the final,
    possibly merged, models.
    """
    config = config or SolveConfig()
    models = list(models)
    if not models:
        raise ValueError("need at least one robot")
    k = len(models)
    models = [_renumber(m, r) for r, m in enumerate(models)]
    t0 = time.monotonic()
    deadline = t0 + config.deadline
    rng = random.Random(config.seed)
    stats = SolveStats()
    restart = 0
    while True:
        search = _Search(models, env, config, rng, stats, deadline, restart)
        try:
            status, plan = search.run()
        except _Restart as m:
            models = merge_models(models, m.i, m.j)
            restart += 1
            log.info("merging robots %d and %d, restarting with %d models", m.i, m.j, len(models))
            continue
        stats.wall_time = time.monotonic() - t0
        stats.final_robot_count = len(models)
        if status != SOLVED:
            return SolveResult(status, None, stats, models)
        return SolveResult(status, split_plan(plan, k), stats, models, plan)


def _renumber(model: RobotModel, r: int) -> RobotModel:
    if model.parts or model.members == (r,):
        return model
    from dataclasses import replace

    return replace(model, members=(r,))
