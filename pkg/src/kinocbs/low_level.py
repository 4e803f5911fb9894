"""Constrained, resumable kinodynamic RRT (the CSTR-X low-level planner)."""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from kinocbs.conflicts import (
    Constraint,
    bodies_collide,
    body_corners,
    first_violation_indexed,
    safety_margin,
)
from kinocbs.dynamics import DEFAULT_STEP, RobotModel, rk4_step
from kinocbs.geometry import ConvexPolygon, Workspace, corners_hit_obstacle, corners_inside
from kinocbs.trajectory import Segment, Trajectory


@dataclass(frozen=True)
class Environment:
    workspace: Workspace
    obstacles: tuple[ConvexPolygon, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))


@dataclass(frozen=True)
class PlannerSettings:
    """Tuning knobs shared by every planner in the package."""

    step: float = DEFAULT_STEP
    dt: float = 0.1
    goal_bias: float = 0.05
    max_steps: int = 20
    position_weight: float = 1.0
    heading_weight: float = 0.5
    other_weight: float = 0.2
    inflate: bool = True

    def __post_init__(self):
        if self.step <= 0 or self.dt <= 0:
            raise ValueError("step and dt must be positive")
        if self.dt < self.step - 1e-12:
            raise ValueError("dt must be at least one integration step")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must lie in [0, 1]")

    @property
    def stride(self) -> int:
        """Integration steps between collision samples (never exceeding dt)."""
        return max(1, int(math.floor(self.dt / self.step + 1e-9)))

    def margin(self, model: RobotModel) -> float:
        if not self.inflate:
            return 0.0
        return safety_margin(model, self.stride * self.step)


class MotionTree:
    """Motion tree with root at index 0. Arrival times are kept as integer step counts."""

    def __init__(self, model: RobotModel, root: Sequence[float], constraint_key: tuple = ()):
        self.model = model
        self.constraint_key = constraint_key
        self.states: list[tuple] = [tuple(root)]
        self.parents: list[int] = [-1]
        self.controls: list[tuple | None] = [None]
        self.steps: list[int] = [0]
        self.arrival: list[int] = [0]
        self.tally: dict[int, int] = {}
        self.attempts = 0
        n = len(self.states[0])
        self._X = np.empty((64, n))
        self._X[0] = self.states[0]

    def __len__(self):
        return len(self.states)

    def add(self, state: tuple, parent: int, control: tuple, steps: int) -> int:
        idx = len(self.states)
        self.states.append(state)
        self.parents.append(parent)
        self.controls.append(control)
        self.steps.append(steps)
        self.arrival.append(self.arrival[parent] + steps)
        if idx >= self._X.shape[0]:
            grown = np.empty((2 * self._X.shape[0], self._X.shape[1]))
            grown[:idx] = self._X[:idx]
            self._X = grown
        self._X[idx] = state
        return idx

    def arrival_time(self, idx: int, step: float) -> float:
        return self.arrival[idx] * step

    def path(self, leaf: int) -> list[int]:
        out = []
        k = leaf
        while k >= 0:
            out.append(k)
            k = self.parents[k]
        out.reverse()
        return out

    def state_matrix(self) -> np.ndarray:
        return self._X[: len(self.states)]


class Metric:
    """Weighted distance: Euclidean per body position, shortest arc on headings, L1 elsewhere."""

    def __init__(self, model: RobotModel, settings: PlannerSettings):
        self.pos = [(b.x_dim, b.y_dim) for b in model.bodies]
        used = {d for p in self.pos for d in p}
        self.ang = list(model.state_space.angular_dims)
        used.update(self.ang)
        self.other = [k for k in range(model.state_space.dim) if k not in used]
        self.w_pos = settings.position_weight
        self.w_ang = settings.heading_weight
        self.w_other = settings.other_weight

    def to_many(self, X: np.ndarray, q: Sequence[float]) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        d = np.zeros(X.shape[0])
        for xd, yd in self.pos:
            d += self.w_pos * np.hypot(X[:, xd] - q[xd], X[:, yd] - q[yd])
        if self.ang:
            a = np.abs(X[:, self.ang] - q[self.ang]) % (2 * math.pi)
            d += self.w_ang * np.minimum(a, 2 * math.pi - a).sum(axis=1)
        if self.other:
            d += self.w_other * np.abs(X[:, self.other] - q[self.other]).sum(axis=1)
        return d

    def __call__(self, a: Sequence[float], b: Sequence[float]) -> float:
        return float(self.to_many(np.asarray([a], dtype=float), b)[0])


@dataclass
class Solution:
    trajectory: Trajectory
    tree: MotionTree
    leaf: int


@dataclass
class Exhausted:
    tree: MotionTree
    c_max: Constraint | None = None
    timed_out: bool = False


LowLevelOutcome = Union[Solution, Exhausted]


def constraint_key(constraints: Sequence[Constraint]) -> tuple:
    return tuple(c.key() for c in constraints)


def tree_to_trajectory(tree: MotionTree, leaf: int, step: float = DEFAULT_STEP) -> Trajectory:
    idx = tree.path(leaf)
    segs = [Segment(tree.controls[k], tree.steps[k] * step) for k in idx[1:]]
    return Trajectory(tree.model, tree.states[0], segs, step)


def sample_state(model: RobotModel, rng: random.Random, goal_bias: float) -> list[float]:
    ss = model.state_space
    if rng.random() < goal_bias:
        x = [0.0] * ss.dim
        for k, lo, hi in ss.bounded_dims:
            x[k] = min(max(0.0, lo), hi)
        for k in ss.angular_dims:
            x[k] = rng.uniform(-math.pi, math.pi)
        for b, g in zip(model.bodies, model.goals):
            x[b.x_dim], x[b.y_dim] = g.center
        return x
    x = []
    for lo, hi, ang in zip(ss.lower, ss.upper, ss.angular):
        x.append(rng.uniform(-math.pi, math.pi) if ang else rng.uniform(lo, hi))
    return x


def sample_control(model: RobotModel, rng: random.Random) -> tuple[float, ...]:
    cs = model.control_space
    return tuple(rng.uniform(lo, hi) for lo, hi in zip(cs.lower, cs.upper))


class StaticChecker:
    """Workspace, state-bound, obstacle and meta-robot self-collision checks."""

    def __init__(self, model: RobotModel, env: Environment, inflate: float):
        self.model = model
        self.env = env
        self.inflate = inflate
        self.multi = len(model.bodies) > 1

    def ok(self, x: Sequence[float]) -> bool:
        inflated = body_corners(self.model, x, self.inflate)
        true = body_corners(self.model, x) if self.inflate > 0 else inflated
        ws = self.env.workspace
        for c in true:
            if not corners_inside(c, ws):
                return False
        for ob in self.env.obstacles:
            for c in inflated:
                if corners_hit_obstacle(c, ob):
                    return False
        if self.multi:
            n = len(inflated)
            for a in range(n):
                for b in range(a + 1, n):
                    if bodies_collide([inflated[a]], [inflated[b]]):
                        return False
        return True


def _hold_violation(model: RobotModel, x: Sequence[float], arrival: int, constraints: Sequence[Constraint],
                    stride: int, step: float, inflate: float) -> Constraint | None:
    # The robot rests at x after arriving; shadows may still run into it.
    own = None
    for c in constraints:
        end = int(math.floor(c.t_end / step + 1e-9))
        if end < arrival:
            continue
        lo = max(arrival, int(math.ceil(c.t_start / step - 1e-9)))
        samples = set(range(lo + (-lo) % stride, end + 1, stride))
        samples.update((lo, end))
        for g in sorted(samples):
            if own is None:
                own = body_corners(model, x, inflate)
            if bodies_collide(own, c.corners_at_index(g)):
                return c
    return None


def cstr_plan(
    model: RobotModel,
    env: Environment,
    constraints: Sequence[Constraint] = (),
    seed_tree: MotionTree | None = None,
    iterations: int | None = None,
    deadline: float | None = None,
    rng: random.Random | None = None,
    settings: PlannerSettings | None = None,
) -> LowLevelOutcome:
    """Grow a kinodynamic RRT that avoids obstacles and respects ``constraints``.

    ``deadline`` is an absolute ``time.monotonic()`` value. With ``iterations=None``
    the loop runs until the deadline. A ``seed_tree`` is only accepted when it was
    grown for the same model and the same constraint list.
    """
    settings = settings or PlannerSettings()
    rng = rng or random.Random(0)
    if iterations is None and deadline is None:
        raise ValueError("need an iteration budget or a deadline")
    constraints = list(constraints)
    key = constraint_key(constraints)
    step = settings.step
    stride = settings.stride
    inflate = settings.margin(model)
    checker = StaticChecker(model, env, inflate)

    if seed_tree is not None and len(seed_tree) > 0:
        if seed_tree.model is not model and seed_tree.model != model:
            raise ValueError("seed tree was grown for a different model")
        if seed_tree.constraint_key != key:
            raise ValueError("seed tree was grown under a different constraint set")
        tree = seed_tree
    else:
        tree = MotionTree(model, model.start, key)
        if not checker.ok(model.start):
            return Exhausted(tree)

    metric = Metric(model, settings)
    f = model.dynamics.fn
    angular = model.state_space.angular_dims
    bounded = model.state_space.bounded_dims
    index_of = {id(c): k for k, c in enumerate(constraints)}

    if len(tree) == 1 and model.in_goal(model.start):
        hold = _hold_violation(model, model.start, 0, constraints, stride, step, inflate)
        if hold is None:
            return Solution(tree_to_trajectory(tree, 0, step), tree, 0)

    it = 0
    timed_out = False
    while iterations is None or it < iterations:
        if deadline is not None and (it & 15) == 0 and time.monotonic() > deadline:
            timed_out = True
            break
        it += 1
        tree.attempts += 1
        target = sample_state(model, rng, settings.goal_bias)
        near = int(np.argmin(metric.to_many(tree.state_matrix(), target)))
        u = sample_control(model, rng)
        k = rng.randint(1, settings.max_steps)

        x = tree.states[near]
        start_g = tree.arrival[near]
        states = [x]
        valid = True
        for s in range(1, k + 1):
            x = rk4_step(f, x, u, step, angular)
            for d, lo, hi in bounded:
                if x[d] < lo or x[d] > hi:
                    valid = False
                    break
            if not valid:
                break
            g = start_g + s
            if (g % stride == 0 or s == k) and not checker.ok(x):
                valid = False
                break
            states.append(x)
        if not valid:
            continue

        if constraints:
            bad = first_violation_indexed(model, states, start_g, constraints, stride, step,
                                          inflate, include_start=False)
            if bad is not None:
                ci = index_of[id(bad)]
                tree.tally[ci] = tree.tally.get(ci, 0) + 1
                continue

        new = tree.add(x, near, u, k)
        if model.in_goal(x):
            hold = _hold_violation(model, x, tree.arrival[new], constraints, stride, step, inflate)
            if hold is None:
                return Solution(tree_to_trajectory(tree, new, step), tree, new)
            ci = index_of[id(hold)]
            tree.tally[ci] = tree.tally.get(ci, 0) + 1

    c_max = None
    if tree.tally:
        best = max(tree.tally.values())
        c_max = constraints[min(k for k, v in tree.tally.items() if v == best)]
    return Exhausted(tree, c_max, timed_out)
