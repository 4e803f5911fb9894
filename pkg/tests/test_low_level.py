import math
import random

import numpy as np
import pytest

from kinocbs.conflicts import Constraint, motion_violates_constraints
from kinocbs.dynamics import second_order_car
from kinocbs.geometry import ConvexPolygon, Workspace
from kinocbs.low_level import (
    Environment,
    Exhausted,
    Metric,
    MotionTree,
    PlannerSettings,
    Solution,
    cstr_plan,
    sample_state,
    tree_to_trajectory,
)
from kinocbs.trajectory import Segment, Trajectory
from helpers import coast
from oracles import body_polygon, check_plan

OPEN = Environment(Workspace(0, 10, 0, 10))
SETTINGS = PlannerSettings()

# A wall at x in [4.6, 5.4] with one opening at y in [1.4, 2.6]
WALLED_WS = Workspace(0, 10, 0, 4)
WALLS = (ConvexPolygon.rectangle(4.6, 0, 5.4, 1.4), ConvexPolygon.rectangle(4.6, 2.6, 5.4, 4))
WALLED = Environment(WALLED_WS, WALLS)


def _car(start, goal, radius, ws=OPEN.workspace):
    return second_order_car("c", start, goal, radius, ws)


def test_open_world_near_goal_success_rate():
    m = _car((4.5, 5, 0, 0, 0), (5.5, 5), 0.5)
    hits = 0
    for seed in range(100):
        out = cstr_plan(m, OPEN, iterations=10_000, rng=random.Random(seed))
        if isinstance(out, Solution):
            x = out.trajectory.final_state
            assert math.hypot(x[0] - 5.5, x[1] - 5) <= 0.5
            hits += 1
    assert hits >= 95


def _blocker(t_end=100.0):
    parked = second_order_car("p", (5.0, 2.0, math.pi / 2, 0, 0), (5.0, 2.0), 0.5, WALLED_WS, member=1)
    return Constraint(0, 1, 0.0, t_end, coast(parked, 1.0))


def _decoy():
    far = second_order_car("q", (1.0, 3.4, 0, 0, 0), (1.0, 3.4), 0.5, WALLED_WS, member=2)
    return Constraint(0, 2, 0.0, 0.5, coast(far, 1.0))


def test_blocked_corridor_reports_the_blocker():
    m = _car((1.0, 2.0, 0, 0, 0), (8.5, 2.0), 0.6, WALLED_WS)
    cons = [_decoy(), _blocker()]
    out = cstr_plan(m, WALLED, cons, iterations=4000, rng=random.Random(1))
    assert isinstance(out, Exhausted)
    assert out.c_max is cons[1]
    best = max(out.tree.tally.values())
    assert out.tree.tally[1] == best
    assert all(v >= 0 for v in out.tree.tally.values())


def test_no_violation_means_no_cmax():
    m = _car((1.0, 2.0, 0, 0, 0), (8.5, 2.0), 0.6, WALLED_WS)
    out = cstr_plan(m, WALLED, [], iterations=5, rng=random.Random(0))
    assert isinstance(out, Exhausted) and out.c_max is None and not out.tree.tally


def test_resume_grows_the_same_tree():
    m = _car((1.0, 2.0, 0, 0, 0), (8.5, 2.0), 0.6, WALLED_WS)
    cons = [_blocker()]
    first = cstr_plan(m, WALLED, cons, iterations=300, rng=random.Random(2))
    assert isinstance(first, Exhausted)
    root = first.tree.states[0]
    n0 = len(first.tree)
    tally0 = dict(first.tree.tally)
    again = cstr_plan(m, WALLED, cons, seed_tree=first.tree, iterations=300, rng=random.Random(3))
    assert again.tree is first.tree
    assert len(again.tree) >= n0 and again.tree.states[0] == root
    assert all(again.tree.tally.get(k, 0) >= v for k, v in tally0.items())
    with pytest.raises(ValueError):
        cstr_plan(m, WALLED, [_blocker()], seed_tree=first.tree, iterations=10)


def test_deterministic_under_seed():
    m = _car((1.0, 2.0, 0, 0, 0), (8.5, 2.0), 0.6, WALLED_WS)
    a = cstr_plan(m, WALLED, iterations=400, rng=random.Random(5))
    b = cstr_plan(m, WALLED, iterations=400, rng=random.Random(5))
    assert type(a) is type(b)
    assert a.tree.states == b.tree.states and a.tree.controls == b.tree.controls


def test_goal_bias_fraction():
    m = _car((1, 1, 0, 0, 0), (7, 3), 1.0)
    rng = random.Random(0)
    n = 20_000
    hits = sum(1 for _ in range(n) if sample_state(m, rng, 0.05)[:2] == [7, 3])
    assert abs(hits / n - 0.05) <= 0.02


def _slow_metric(a, b):
    d = math.hypot(a[0] - b[0], a[1] - b[1])
    da = abs(a[2] - b[2]) % (2 * math.pi)
    d += 0.5 * min(da, 2 * math.pi - da)
    d += 0.2 * (abs(a[3] - b[3]) + abs(a[4] - b[4]))
    return d


def test_nearest_matches_linear_scan():
    m = _car((1.0, 2.0, 0, 0, 0), (8.5, 2.0), 0.6, WALLED_WS)
    out = cstr_plan(m, WALLED, iterations=500, rng=random.Random(4))
    tree = out.tree
    metric = Metric(m, SETTINGS)
    rng = random.Random(9)
    for _ in range(200):
        q = sample_state(m, rng, 0.0)
        fast = int(np.argmin(metric.to_many(tree.state_matrix(), q)))
        slow = min(range(len(tree)), key=lambda k: _slow_metric(tree.states[k], q))
        assert _slow_metric(tree.states[fast], q) == pytest.approx(_slow_metric(tree.states[slow], q), abs=1e-12)


def test_tree_to_trajectory_replays_nodes():
    m = _car((1.0, 2.0, 0, 0, 0), (8.5, 2.0), 0.6, WALLED_WS)
    tree = cstr_plan(m, WALLED, iterations=300, rng=random.Random(6)).tree
    assert tree_to_trajectory(tree, 0).duration == 0
    rng = random.Random(1)
    for leaf in rng.sample(range(1, len(tree)), 20):
        path = tree.path(leaf)
        traj = tree_to_trajectory(tree, leaf)
        assert len(traj.segments) == len(path) - 1
        for node in path:
            assert traj.state_at_index(tree.arrival[node]) == pytest.approx(tree.states[node], abs=1e-9)
        assert traj.state_at(traj.duration) == pytest.approx(tree.states[leaf], abs=1e-9)


def test_tree_arrival_bookkeeping():
    t = MotionTree(_car((1, 1, 0, 0, 0), (7, 3), 1.0), (1, 1, 0, 0, 0))
    a = t.add((2, 1, 0, 0, 0), 0, (0, 0), 4)
    b = t.add((3, 1, 0, 0, 0), a, (0, 0), 3)
    assert t.arrival[b] == 7 and t.path(b) == [0, a, b]
    assert t.state_matrix().shape == (3, 5)


def test_constrained_solutions_pass_post_hoc_checks():
    # a robot crossing the opening later in time; solutions must dodge it
    crosser_model = second_order_car("x", (8.5, 2.0, -math.pi, 1.0, 0), (1.0, 2.0), 0.5, WALLED_WS, member=1)
    crosser = Trajectory(crosser_model, crosser_model.start, [Segment((0, 0), 6.0)])
    m = _car((1.0, 2.0, 0, 0, 0), (8.5, 2.0), 0.6, WALLED_WS)
    solved = 0
    for seed in (2, 3, 6):
        con = Constraint(0, 1, 2.0, 6.0, crosser)
        out = cstr_plan(m, WALLED, [con], iterations=20_000, rng=random.Random(seed))
        if not isinstance(out, Solution):
            continue
        solved += 1
        traj = out.trajectory
        assert check_plan((traj,), WALLS, 0.1) == []
        t0 = 0.0
        x = traj.start
        for seg in traj.segments:
            assert motion_violates_constraints(m, x, seg.control, seg.duration, t0, [con], 0.1) is None
            t0 += seg.duration
            x = traj.state_at(t0)
        # parked robot stays clear of the shadow for the rest of the interval
        me = body_polygon(0.7, 0.5, *traj.final_state[:3])
        for k in range(int(round(t0 / 0.1)), 61):
            y = crosser.state_at(k * 0.1)
            if k * 0.1 >= 2.0:
                assert not me.intersects(body_polygon(0.7, 0.5, *y[:3]))
    assert solved >= 1
