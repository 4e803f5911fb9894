"""Centralized RRT (cRRT) and prioritized RRT (pRRT) comparison planners."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Sequence

from kinocbs.conflicts import Constraint, Plan, validate_plan
from kinocbs.dynamics import RobotModel, merge_models
from kinocbs.low_level import Environment, Solution, cstr_plan
from kinocbs.search import ROOT_FAILED, SOLVED, TIMEOUT, SolveConfig, SolveResult, SolveStats, _renumber, split_plan


def compose_all(models: Sequence[RobotModel]) -> RobotModel:
    merged = list(models)
    while len(merged) > 1:
        merged = merge_models(merged, 0, 1)
    return merged[0]


def crrt_plan(models: Sequence[RobotModel], env: Environment, config: SolveConfig | None = None) -> SolveResult:
    """Plan all robots at once as a single meta-robot."""
    config = config or SolveConfig()
    t0 = time.monotonic()
    models = [_renumber(m, r) for r, m in enumerate(models)]
    meta = compose_all(models)
    stats = SolveStats(low_level_calls=1, final_robot_count=1)
    out = cstr_plan(meta, env, (), iterations=None, deadline=t0 + config.deadline,
                    rng=random.Random(config.seed), settings=config.settings)
    stats.wall_time = time.monotonic() - t0
    if not isinstance(out, Solution):
        return SolveResult(TIMEOUT, None, stats, [meta])
    meta_plan = Plan((out.trajectory,))
    return SolveResult(SOLVED, split_plan(meta_plan, len(models)), stats, [meta], meta_plan)


@dataclass(frozen=True)
class PrioritizedConfig:
    horizon_slack: float = 2.0
    min_horizon: float = 10.0


def prrt_plan(models: Sequence[RobotModel], env: Environment, config: SolveConfig | None = None,
              order: Sequence[int] | None = None, prio: PrioritizedConfig = PrioritizedConfig()) -> SolveResult:
    """Plan robots one at a time, each avoiding the already planned ones as timed obstacles."""
    config = config or SolveConfig()
    t0 = time.monotonic()
    models = [_renumber(m, r) for r, m in enumerate(models)]
    k = len(models)
    order = list(range(k)) if order is None else list(order)
    if sorted(order) != list(range(k)):
        raise ValueError(f"order {order} is not a permutation of 0..{k - 1}")
    settings = config.settings
    rng = random.Random(config.seed)
    deadline = t0 + config.deadline
    stats = SolveStats(final_robot_count=k)
    planned: dict[int, object] = {}
    for r in order:
        horizon = max(prio.horizon_slack * sum(t.duration for t in planned.values()), prio.min_horizon)
        constraints = [
            Constraint(r, q, 0.0, horizon, traj, inflate=settings.margin(models[q]))
            for q, traj in planned.items()
        ]
        stats.low_level_calls += 1
        out = cstr_plan(models[r], env, constraints, iterations=None, deadline=deadline, rng=rng,
                        settings=settings)
        if not isinstance(out, Solution):
            stats.wall_time = time.monotonic() - t0
            return SolveResult(TIMEOUT if out.timed_out else ROOT_FAILED, None, stats, models)
        planned[r] = out.trajectory
    plan = Plan(tuple(planned[r] for r in range(k)))
    stats.wall_time = time.monotonic() - t0
    margins = [settings.margin(m) for m in models]
    if validate_plan(plan, env.obstacles, settings.dt, margins):
        # a robot still moving past the finite horizon met a parked one
        return SolveResult("horizon_conflict", None, stats, models)
    return SolveResult(SOLVED, split_plan(plan, k), stats, models, plan)
