"""Piecewise-constant-control trajectories with hold-at-end semantics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from kinocbs.dynamics import DEFAULT_STEP, RobotModel, State, rk4_step


class TrajectoryError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    control: tuple[float, ...]
    duration: float

    def __post_init__(self):
        object.__setattr__(self, "control", tuple(float(c) for c in self.control))
        if not self.duration > 0:
            raise TrajectoryError(f"segment duration must be positive, got {self.duration}")


class Trajectory:
    """Replay of ``segments`` from ``start`` under ``model``'s dynamics, starting at t=0.

    Every segment lasts a whole number of integration steps. The state after each
    step is cached at construction, so lookups on the step grid are exact and
    anything in between costs one partial RK4 step.
    """

    __slots__ = ("model", "start", "segments", "step", "states", "_step_control", "duration")

    def __init__(self, model: RobotModel, start: Sequence[float], segments: Sequence[Segment],
                 step: float = DEFAULT_STEP):
        self.model = model
        self.start = tuple(float(v) for v in start)
        self.segments = tuple(segments)
        self.step = float(step)
        f = model.dynamics.fn
        angular = model.state_space.angular_dims
        states = [self.start]
        step_control = []
        for seg in self.segments:
            n = round(seg.duration / step)
            if n < 1 or abs(n * step - seg.duration) > 1e-9:
                raise TrajectoryError(
                    f"segment duration {seg.duration} is not a multiple of the step {step}"
                )
            x = states[-1]
            for _ in range(n):
                x = rk4_step(f, x, seg.control, step, angular)
                states.append(x)
            step_control.extend([seg.control] * n)
        self.states = states
        self._step_control = step_control
        self.duration = math.fsum(s.duration for s in self.segments)

    @property
    def num_steps(self) -> int:
        return len(self.states) - 1

    @property
    def final_state(self) -> State:
        return self.states[-1]

    def state_at_index(self, k: int) -> State:
        """State after ``k`` integration steps, held at the end."""
        if k >= len(self.states):
            return self.states[-1]
        return self.states[k]

    def state_at(self, t: float) -> State:
        if t < 0:
            raise TrajectoryError(f"negative time {t}")
        n_total = len(self.states) - 1
        if t >= self.duration:
            return self.states[-1]
        r = t / self.step
        n = int(math.floor(r + 1e-9))
        if n >= n_total:
            return self.states[-1]
        rest = t - n * self.step
        if rest <= 1e-12:
            return self.states[n]
        return rk4_step(self.model.dynamics.fn, self.states[n], self._step_control[n], rest,
                        self.model.state_space.angular_dims)

    def sample_times(self, horizon: float, dt: float) -> list[tuple[float, State]]:
        return [(t, self.state_at(t)) for t in sample_grid(horizon, dt)]

    def __repr__(self):
        return f"Trajectory({self.model.name}, {len(self.segments)} segments, duration={self.duration:g})"


def sample_grid(horizon: float, dt: float) -> list[float]:
    """0, dt, 2dt, ... below ``horizon``, then ``horizon`` itself."""
    if dt <= 0 or horizon < 0:
        raise TrajectoryError("need dt > 0 and horizon >= 0")
    times = []
    k = 0
    while True:
        t = k * dt
        if t >= horizon - 1e-9:
            break
        times.append(t)
        k += 1
    times.append(horizon)
    return times


def duration(t: Trajectory) -> float:
    return t.duration


def state_at(t: Trajectory, time: float) -> State:
    return t.state_at(time)


def split_trajectory(traj: Trajectory) -> list[Trajectory]:
    """Per-component trajectories of a meta-robot trajectory (same segment timings)."""
    model = traj.model
    if not model.parts:
        return [traj]
    starts = model.split_state(traj.start)
    per = [[] for _ in model.parts]
    for seg in traj.segments:
        for k, u in enumerate(model.split_control(seg.control)):
            per[k].append(Segment(u, seg.duration))
    return [Trajectory(p, s, segs, traj.step) for p, s, segs in zip(model.parts, starts, per)]


def join_trajectories(model: RobotModel, parts: Sequence[Trajectory]) -> Trajectory:
    """Inverse of :func:`split_trajectory` for trajectories with identical timings."""
    first = parts[0]
    for p in parts[1:]:
        if [s.duration for s in p.segments] != [s.duration for s in first.segments]:
            raise TrajectoryError("component trajectories have different segment timings")
    segs = []
    for k, seg in enumerate(first.segments):
        u = []
        for p in parts:
            u.extend(p.segments[k].control)
        segs.append(Segment(tuple(u), seg.duration))
    start = []
    for p in parts:
        start.extend(p.start)
    return Trajectory(model, start, segs, first.step)
