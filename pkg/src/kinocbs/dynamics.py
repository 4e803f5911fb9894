"""State/control spaces, car vector fields, fixed-step RK4 and meta-robot composition."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

from kinocbs.geometry import BodySpec, Workspace

TWO_PI = 2.0 * math.pi
DEFAULT_STEP = 0.05

SECOND_ORDER_CAR = "secondOrderCar"
KINEMATIC_CAR = "kinematicCar"
COMPOSITE = "composite"

State = tuple[float, ...]
Control = tuple[float, ...]


class DynamicsError(ValueError):
    pass


def wrap_angle(a: float) -> float:
    """Map an angle to [-pi, pi)."""
    r = (a + math.pi) % TWO_PI - math.pi
    if r >= math.pi:
        r -= TWO_PI
    return r


@dataclass(frozen=True)
class StateSpace:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    angular: tuple[bool, ...]

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.angular)):
            raise DynamicsError("state bound arrays differ in length")
        for k, (lo, hi, ang) in enumerate(zip(self.lower, self.upper, self.angular)):
            if not ang and not lo < hi:
                raise DynamicsError(f"state dim {k}: lower bound {lo} not below upper {hi}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @cached_property
    def bounded_dims(self) -> tuple[tuple[int, float, float], ...]:
        return tuple(
            (k, lo, hi)
            for k, (lo, hi, ang) in enumerate(zip(self.lower, self.upper, self.angular))
            if not ang
        )

    @cached_property
    def angular_dims(self) -> tuple[int, ...]:
        return tuple(k for k, a in enumerate(self.angular) if a)

    def contains(self, x: Sequence[float]) -> bool:
        for k, lo, hi in self.bounded_dims:
            if x[k] < lo or x[k] > hi:
                return False
        return True


@dataclass(frozen=True)
class ControlSpace:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise DynamicsError("control bound arrays differ in length")
        for k, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if lo > hi:
                raise DynamicsError(f"control dim {k}: lower bound {lo} above upper {hi}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, u: Sequence[float]) -> bool:
        return len(u) == self.dim and all(lo <= v <= hi for v, lo, hi in zip(u, self.lower, self.upper))


@dataclass(frozen=True)
class VectorField:
    """Right-hand side of x' = f(x, u).

    ``secondOrderCar``: state (x, y, theta, v, phi), control (accel, steer rate).
    ``kinematicCar``: state (x, y, theta), control (steering angle), constant
    forward ``speed``. ``composite`` stacks independent components.
    """

    kind: str
    wheelbase: float = 0.0
    speed: float = 0.0
    components: tuple["VectorField", ...] = ()

    def __post_init__(self):
        if self.kind in (SECOND_ORDER_CAR, KINEMATIC_CAR):
            if not self.wheelbase > 0:
                raise DynamicsError("car wheelbase must be positive")
        elif self.kind == COMPOSITE:
            if len(self.components) < 2:
                raise DynamicsError("composite field needs at least two components")
        else:
            raise DynamicsError(f"unknown vector field kind {self.kind!r}")

    @property
    def state_dim(self) -> int:
        if self.kind == SECOND_ORDER_CAR:
            return 5
        if self.kind == KINEMATIC_CAR:
            return 3
        return sum(c.state_dim for c in self.components)

    @property
    def control_dim(self) -> int:
        if self.kind == SECOND_ORDER_CAR:
            return 2
        if self.kind == KINEMATIC_CAR:
            return 1
        return sum(c.control_dim for c in self.components)

    @cached_property
    def fn(self) -> Callable[[Sequence[float], Sequence[float]], list[float]]:
        cos, sin, tan = math.cos, math.sin, math.tan
        if self.kind == SECOND_ORDER_CAR:
            inv_l = 1.0 / self.wheelbase

            def f(x, u):
                th, v, phi = x[2], x[3], x[4]
                return [v * cos(th), v * sin(th), v * inv_l * tan(phi), u[0], u[1]]

            return f
        if self.kind == KINEMATIC_CAR:
            s = self.speed
            rate = self.speed / self.wheelbase

            def f(x, u):
                th = x[2]
                return [s * cos(th), s * sin(th), rate * tan(u[0])]

            return f

        parts = []
        xo = uo = 0
        for c in self.components:
            parts.append((c.fn, xo, xo + c.state_dim, uo, uo + c.control_dim))
            xo += c.state_dim
            uo += c.control_dim

        def f(x, u):
            out = []
            for g, x0, x1, u0, u1 in parts:
                out.extend(g(x[x0:x1], u[u0:u1]))
            return out

        return f

    def __call__(self, x: Sequence[float], u: Sequence[float]) -> list[float]:
        if len(x) != self.state_dim or len(u) != self.control_dim:
            raise DynamicsError(
                f"{self.kind} expects {self.state_dim} states / {self.control_dim} controls, "
                f"got {len(x)} / {len(u)}"
            )
        return self.fn(x, u)


def eval_field(field_: VectorField, x: Sequence[float], u: Sequence[float]) -> list[float]:
    return field_(x, u)


def rk4_step(f, x: Sequence[float], u: Sequence[float], h: float, angular: Sequence[int]) -> State:
    k1 = f(x, u)
    hh = 0.5 * h
    k2 = f([a + hh * b for a, b in zip(x, k1)], u)
    k3 = f([a + hh * b for a, b in zip(x, k2)], u)
    k4 = f([a + h * b for a, b in zip(x, k3)], u)
    h6 = h / 6.0
    out = [a + h6 * (p + 2.0 * q + 2.0 * r + s) for a, p, q, r, s in zip(x, k1, k2, k3, k4)]
    for k in angular:
        out[k] = wrap_angle(out[k])
    return tuple(out)


def rk4_steps(f, x0: Sequence[float], u: Sequence[float], h: float, n: int, angular: Sequence[int]) -> list[State]:
    """States after 1..n full steps (the start state is not included)."""
    out = []
    x = x0
    for _ in range(n):
        x = rk4_step(f, x, u, h, angular)
        out.append(x)
    return out


@dataclass(frozen=True)
class BodyPlacement:
    """A rigid body and the state dims that place it in the workspace."""

    body: BodySpec
    x_dim: int = 0
    y_dim: int = 1
    heading_dim: int = 2

    def shifted(self, offset: int) -> "BodyPlacement":
        return BodyPlacement(self.body, self.x_dim + offset, self.y_dim + offset, self.heading_dim + offset)


@dataclass(frozen=True)
class GoalRegion:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DynamicsError(f"goal radius must be positive, got {self.radius}")

    def contains(self, x: float, y: float) -> bool:
        dx = x - self.center[0]
        dy = y - self.center[1]
        return dx * dx + dy * dy <= self.radius * self.radius


@dataclass(frozen=True)
class RobotModel:
    """One robot (or a merged meta-robot): spaces, dynamics, bodies, start and goals.

    ``bodies`` and ``goals`` are parallel tuples; a plain robot has one of each.
    ``parts`` lists the plain robots a meta-robot was built from, in state order,
    and ``members`` their indices in the original problem.
    """

    name: str
    state_space: StateSpace
    control_space: ControlSpace
    dynamics: VectorField
    bodies: tuple[BodyPlacement, ...]
    start: State
    goals: tuple[GoalRegion, ...]
    members: tuple[int, ...] = (0,)
    parts: tuple["RobotModel", ...] = field(default=(), repr=False)

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        ss = self.state_space
        if ss.dim != self.dynamics.state_dim or self.control_space.dim != self.dynamics.control_dim:
            raise DynamicsError(f"{self.name}: space dimensions do not match the vector field")
        if len(self.start) != ss.dim:
            raise DynamicsError(f"{self.name}: start has {len(self.start)} values, expected {ss.dim}")
        if not ss.contains(self.start):
            raise DynamicsError(f"{self.name}: start state {self.start} violates state bounds")
        if len(self.goals) != len(self.bodies) or not self.bodies:
            raise DynamicsError(f"{self.name}: need one goal per body")
        for b in self.bodies:
            if not ss.angular[b.heading_dim]:
                raise DynamicsError(f"{self.name}: heading dim {b.heading_dim} is not angular")
            if b.x_dim == b.y_dim:
                raise DynamicsError(f"{self.name}: position dims must be distinct")

    @property
    def is_meta(self) -> bool:
        return len(self.bodies) > 1

    @property
    def components(self) -> tuple["RobotModel", ...]:
        return self.parts if self.parts else (self,)

    def poses(self, x: Sequence[float]) -> list[tuple[float, float, float]]:
        return [(x[b.x_dim], x[b.y_dim], x[b.heading_dim]) for b in self.bodies]

    def in_goal(self, x: Sequence[float]) -> bool:
        for b, g in zip(self.bodies, self.goals):
            if not g.contains(x[b.x_dim], x[b.y_dim]):
                return False
        return True

    def goals_within(self, w: Workspace) -> bool:
        return all(
            w.xmin <= g.center[0] - g.radius
            and g.center[0] + g.radius <= w.xmax
            and w.ymin <= g.center[1] - g.radius
            and g.center[1] + g.radius <= w.ymax
            for g in self.goals
        )

    @cached_property
    def max_point_speed(self) -> float:
        """Upper bound on the speed of any body point, from state and control bounds."""
        best = 0.0
        for part in self.components:
            fld = part.dynamics
            lo, hi = part.state_space.lower, part.state_space.upper
            if fld.kind == SECOND_ORDER_CAR:
                vmax = max(abs(lo[3]), abs(hi[3]))
                phimax = max(abs(lo[4]), abs(hi[4]))
            else:
                vmax = abs(fld.speed)
                clo, chi = part.control_space.lower, part.control_space.upper
                phimax = max(abs(clo[0]), abs(chi[0]))
            phimax = min(phimax, 0.5 * math.pi - 1e-6)
            omega = vmax / fld.wheelbase * math.tan(phimax)
            r = part.bodies[0].body.circumradius
            best = max(best, vmax + omega * r)
        return best

    def split_state(self, x: Sequence[float]) -> list[State]:
        out = []
        o = 0
        for p in self.components:
            out.append(tuple(x[o:o + p.state_space.dim]))
            o += p.state_space.dim
        return out

    def split_control(self, u: Sequence[float]) -> list[Control]:
        out = []
        o = 0
        for p in self.components:
            out.append(tuple(u[o:o + p.control_space.dim]))
            o += p.control_space.dim
        return out


def propagate(model: RobotModel, x0: Sequence[float], u: Sequence[float], duration: float,
              step: float = DEFAULT_STEP) -> State:
    """Integrate with fixed-step RK4; the last step is shortened to land on ``duration``."""
    if duration < 0 or step <= 0:
        raise DynamicsError("duration must be >= 0 and step > 0")
    f = model.dynamics.fn
    angular = model.state_space.angular_dims
    x = tuple(float(v) for v in x0)
    n = int(math.floor(duration / step + 1e-9))
    for _ in range(n):
        x = rk4_step(f, x, u, step, angular)
    rest = duration - n * step
    if rest > 1e-12:
        x = rk4_step(f, x, u, rest, angular)
    return x


# -- model constructors ---------------------------------------------------

CAR_BODY = BodySpec(0.7, 0.5)


def second_order_car(
    name: str,
    start: Sequence[float],
    goal: tuple[float, float],
    goal_radius: float,
    workspace: Workspace,
    *,
    body: BodySpec = CAR_BODY,
    wheelbase: float = 0.7,
    v_bounds: tuple[float, float] = (-1.0, 2.0),
    phi_bounds: tuple[float, float] = (-math.pi / 4, math.pi / 4),
    accel_bounds: tuple[float, float] = (-1.0, 1.0),
    steer_rate_bounds: tuple[float, float] = (-0.5, 0.5),
    member: int = 0,
) -> RobotModel:
    ss = StateSpace(
        (workspace.xmin, workspace.ymin, -math.pi, v_bounds[0], phi_bounds[0]),
        (workspace.xmax, workspace.ymax, math.pi, v_bounds[1], phi_bounds[1]),
        (False, False, True, False, False),
    )
    cs = ControlSpace((accel_bounds[0], steer_rate_bounds[0]), (accel_bounds[1], steer_rate_bounds[1]))
    return RobotModel(
        name, ss, cs, VectorField(SECOND_ORDER_CAR, wheelbase=wheelbase),
        (BodyPlacement(body),), tuple(start), (GoalRegion(tuple(goal), goal_radius),),
        members=(member,),
    )


def kinematic_car(
    name: str,
    start: Sequence[float],
    goal: tuple[float, float],
    goal_radius: float,
    workspace: Workspace,
    *,
    body: BodySpec = CAR_BODY,
    wheelbase: float = 0.7,
    speed: float = 1.0,
    steer_bounds: tuple[float, float] = (-math.pi / 4, math.pi / 4),
    member: int = 0,
) -> RobotModel:
    ss = StateSpace(
        (workspace.xmin, workspace.ymin, -math.pi),
        (workspace.xmax, workspace.ymax, math.pi),
        (False, False, True),
    )
    cs = ControlSpace((steer_bounds[0],), (steer_bounds[1],))
    return RobotModel(
        name, ss, cs, VectorField(KINEMATIC_CAR, wheelbase=wheelbase, speed=speed),
        (BodyPlacement(body),), tuple(start), (GoalRegion(tuple(goal), goal_radius),),
        members=(member,),
    )


def compose(a: RobotModel, b: RobotModel) -> RobotModel:
    """Meta-robot over the concatenated spaces of ``a`` and ``b`` (nesting flattens)."""
    parts = a.components + b.components
    off = a.state_space.dim
    ss = StateSpace(
        a.state_space.lower + b.state_space.lower,
        a.state_space.upper + b.state_space.upper,
        a.state_space.angular + b.state_space.angular,
    )
    cs = ControlSpace(a.control_space.lower + b.control_space.lower,
                      a.control_space.upper + b.control_space.upper)
    fld = VectorField(COMPOSITE, components=tuple(p.dynamics for p in parts))
    bodies = a.bodies + tuple(p.shifted(off) for p in b.bodies)
    return RobotModel(
        f"{a.name}+{b.name}", ss, cs, fld, bodies, a.start + b.start, a.goals + b.goals,
        members=a.members + b.members, parts=parts,
    )


def merge_models(models: Sequence[RobotModel], i: int, j: int) -> list[RobotModel]:
    """Replace models i and j by their meta-robot, placed at index min(i, j)."""
    if i == j or not (0 <= i < len(models) and 0 <= j < len(models)):
        raise DynamicsError(f"cannot merge robots {i} and {j} of {len(models)}")
    lo, hi = min(i, j), max(i, j)
    meta = compose(models[lo], models[hi])
    out = list(models)
    out[lo] = meta
    del out[hi]
    return out
