"""Conflict extraction over sampled time and moving-obstacle constraints."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from kinocbs.dynamics import RobotModel
from kinocbs.geometry import ConvexPolygon, Point, corners_hit_obstacle, rect_corners, rects_intersect
from kinocbs.trajectory import Trajectory, sample_grid

TIME_EPS = 1e-9


class InvalidPlanError(RuntimeError):
    """A plan that should be obstacle-free is not."""

    def __init__(self, robot: int, time: float, obstacle: int):
        super().__init__(f"robot {robot} hits obstacle {obstacle} at t={time:.4f}")
        self.robot = robot
        self.time = time
        self.obstacle = obstacle


@dataclass(frozen=True)
class Conflict:
    i: int
    j: int
    t_start: float
    t_end: float

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("a conflict needs two distinct robots")
        if not 0 <= self.t_start <= self.t_end:
            raise ValueError(f"bad conflict interval [{self.t_start}, {self.t_end}]")
        if self.i > self.j:
            i, j = self.j, self.i
            object.__setattr__(self, "i", i)
            object.__setattr__(self, "j", j)

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)


def body_corners(model: RobotModel, x: Sequence[float], inflate: float = 0.0) -> list[tuple[Point, ...]]:
    out = []
    for b in model.bodies:
        out.append(rect_corners(b.body.length + 2.0 * inflate, b.body.width + 2.0 * inflate,
                                x[b.x_dim], x[b.y_dim], x[b.heading_dim]))
    return out


def bodies_collide(a: list, b: list) -> bool:
    for ca in a:
        for cb in b:
            if rects_intersect(ca, cb):
                return True
    return False


def safety_margin(model: RobotModel, dt: float) -> float:
    """Inflation that makes checks every ``dt`` seconds cover the time in between."""
    return model.max_point_speed * 0.5 * dt


@dataclass(eq=False)
class Constraint:
    """Robot ``robot`` must avoid robot ``other``'s body along ``shadow`` for t in [t_start, t_end]."""

    robot: int
    other: int
    t_start: float
    t_end: float
    shadow: Trajectory
    inflate: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def interval(self) -> tuple[float, float]:
        return (self.t_start, self.t_end)

    def active(self, t: float) -> bool:
        return self.t_start - TIME_EPS <= t <= self.t_end + TIME_EPS

    def corners_at_index(self, k: int) -> list:
        k = min(k, self.shadow.num_steps)
        c = self._cache.get(k)
        if c is None:
            c = body_corners(self.shadow.model, self.shadow.states[k], self.inflate)
            self._cache[k] = c
        return c

    def corners_at(self, t: float) -> list:
        return body_corners(self.shadow.model, self.shadow.state_at(t), self.inflate)

    def shadow_polygons(self, t: float) -> list[ConvexPolygon]:
        return [ConvexPolygon(c) for c in self.corners_at(t)]

    def key(self) -> tuple:
        return (self.robot, self.other, self.t_start, self.t_end, id(self.shadow))


@dataclass(frozen=True)
class Plan:
    trajectories: tuple[Trajectory, ...]

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))

    def __len__(self):
        return len(self.trajectories)

    def __getitem__(self, k: int) -> Trajectory:
        return self.trajectories[k]

    def __iter__(self):
        return iter(self.trajectories)

    @property
    def cost(self) -> float:
        return math.fsum(t.duration for t in self.trajectories)

    @property
    def horizon(self) -> float:
        return max((t.duration for t in self.trajectories), default=0.0)

    def replace(self, k: int, traj: Trajectory) -> "Plan":
        ts = list(self.trajectories)
        ts[k] = traj
        return Plan(tuple(ts))


def validate_plan(plan: Plan, obstacles: Sequence[ConvexPolygon], dt: float,
                  margins: Sequence[float] | None = None) -> list[Conflict]:
    """Robot-robot conflicts sampled every ``dt`` up to the longest trajectory.

    ``margins`` optionally inflates each robot's bodies for the robot-robot test.
    Obstacles are always tested with the true bodies and raise InvalidPlanError.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    k = len(plan)
    times = sample_grid(plan.horizon, dt)
    margins = list(margins) if margins is not None else [0.0] * k
    radius = [max(b.body.circumradius for b in t.model.bodies) + m for t, m in zip(plan, margins)]
    corners = []
    centers = []
    for r, traj in enumerate(plan):
        per_t = []
        cen = []
        for t in times:
            x = traj.state_at(t)
            if obstacles:
                for ob_idx, ob in enumerate(obstacles):
                    for c in body_corners(traj.model, x):
                        if corners_hit_obstacle(c, ob):
                            raise InvalidPlanError(r, t, ob_idx)
            per_t.append(body_corners(traj.model, x, margins[r]))
            cen.append([(x[b.x_dim], x[b.y_dim]) for b in traj.model.bodies])
        corners.append(per_t)
        centers.append(cen)

    conflicts = []
    for i in range(k):
        for j in range(i + 1, k):
            reach = radius[i] + radius[j]
            reach2 = reach * reach
            run_start = None
            last = None
            for s, t in enumerate(times):
                near = any(
                    (ax - bx) ** 2 + (ay - by) ** 2 <= reach2
                    for ax, ay in centers[i][s] for bx, by in centers[j][s]
                )
                hit = near and bodies_collide(corners[i][s], corners[j][s])
                if hit:
                    if run_start is None:
                        run_start = t
                    last = t
                elif run_start is not None:
                    conflicts.append(Conflict(i, j, run_start, last))
                    run_start = None
            if run_start is not None:
                conflicts.append(Conflict(i, j, run_start, last))
    conflicts.sort(key=lambda c: (c.t_start, c.i, c.j))
    return conflicts


def make_constraints(k: Conflict, plan: Plan, margins: Sequence[float] | None = None
                     ) -> tuple[Constraint, Constraint]:
    """The dual pair of constraints resolving ``k``: (on robot i, on robot j)."""
    mi = margins[k.i] if margins is not None else 0.0
    mj = margins[k.j] if margins is not None else 0.0
    ci = Constraint(k.i, k.j, k.t_start, k.t_end, plan[k.j], inflate=mj)
    cj = Constraint(k.j, k.i, k.t_start, k.t_end, plan[k.i], inflate=mi)
    return ci, cj


def first_violation_indexed(model: RobotModel, states: Sequence, start_index: int,
                            constraints: Sequence[Constraint], stride: int, step: float,
                            inflate: float = 0.0, include_start: bool = True) -> Constraint | None:
    """Check a motion whose ``states[l]`` sits on global step ``start_index + l``.

    Samples every global index divisible by ``stride`` plus the motion's end
    (and start when ``include_start``). Returns the violated constraint with the
    earliest sample time, ties going to the first in ``constraints``.
    """
    if not constraints:
        return None
    end = start_index + len(states) - 1
    t_lo = start_index * step
    t_hi = end * step
    live = [c for c in constraints if c.t_end + TIME_EPS >= t_lo and c.t_start - TIME_EPS <= t_hi]
    if not live:
        return None
    first = start_index if include_start else start_index + 1
    for g in range(first, end + 1):
        if g % stride and g != end and g != start_index:
            continue
        t = g * step
        own = None
        for c in live:
            if not c.active(t):
                continue
            if own is None:
                own = body_corners(model, states[g - start_index], inflate)
            if bodies_collide(own, c.corners_at_index(g)):
                return c
    return None


def motion_violates_constraints(model: RobotModel, start_state: Sequence[float], control: Sequence[float],
                                duration: float, start_time: float, constraints: Sequence[Constraint],
                                dt: float, inflate: float = 0.0) -> Constraint | None:
    """First constraint broken by one constant-control motion starting at absolute ``start_time``.

    The motion is sampled at absolute times start_time, every multiple of ``dt``
    in between, and start_time + duration.
    """
    from kinocbs.trajectory import Segment

    if not constraints:
        return None
    local = Trajectory(model, start_state, [Segment(control, duration)] if duration > 0 else [],
                       step=_step_of(constraints))
    end_time = start_time + duration
    times = [start_time]
    m = math.floor(start_time / dt + TIME_EPS) + 1
    while m * dt < end_time - TIME_EPS:
        times.append(m * dt)
        m += 1
    if end_time > start_time:
        times.append(end_time)
    for t in times:
        own = None
        for c in constraints:
            if not c.active(t):
                continue
            if own is None:
                own = body_corners(model, local.state_at(max(0.0, t - start_time)), inflate)
            if bodies_collide(own, c.corners_at(t)):
                return c
    return None


def _step_of(constraints: Sequence[Constraint]) -> float:
    return constraints[0].shadow.step


def verify_plan(plan: Plan, obstacles: Sequence[ConvexPolygon], dt: float) -> list[str]:
    """Problems found when re-checking a finished plan with true bodies every ``dt``."""
    problems = []
    try:
        for c in validate_plan(plan, obstacles, dt):
            problems.append(f"robots {c.i} and {c.j} collide during [{c.t_start:.3f}, {c.t_end:.3f}]")
    except InvalidPlanError as e:
        problems.append(str(e))
    for r, traj in enumerate(plan):
        if not traj.model.in_goal(traj.final_state):
            problems.append(f"robot {r} does not end inside its goal")
    return problems
