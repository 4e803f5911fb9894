import math
import random

import pytest
from shapely.geometry import Polygon

from kinocbs.conflicts import (
    Conflict,
    Constraint,
    InvalidPlanError,
    Plan,
    make_constraints,
    motion_violates_constraints,
    validate_plan,
    verify_plan,
)
from kinocbs.geometry import BodySpec, ConvexPolygon
from kinocbs.trajectory import Segment, Trajectory
from helpers import coast, cruiser, straight_line_instances
from oracles import body_polygon, check_plan

UNIT = BodySpec(1.0, 1.0)


def test_conflict_invariants():
    c = Conflict(3, 1, 0.5, 0.5)
    assert (c.i, c.j) == (1, 3)
    with pytest.raises(ValueError):
        Conflict(1, 1, 0, 1)
    with pytest.raises(ValueError):
        Conflict(0, 1, 2, 1)


def test_parallel_lanes_no_conflict():
    a = cruiser(0, 0, 0, 1, 0)
    b = cruiser(0, 5, 0, 1, 1)
    assert validate_plan(Plan((coast(a, 4), coast(b, 4))), [], 0.1) == []


def test_head_on_unit_squares():
    a = cruiser(0, 0, 0, 1, 0, body=UNIT)
    b = cruiser(4, 0, -math.pi, 1, 1, body=UNIT)
    # both stop after 2 s while still overlapping, so the conflict runs to the horizon
    plan = Plan((coast(a, 2), coast(b, 2)))
    out = validate_plan(plan, [], 0.1)
    assert len(out) == 1
    assert abs(out[0].t_start - 1.5) <= 0.1 + 1e-9
    assert out[0].t_end == 2.0
    fine = validate_plan(plan, [], 0.001)
    assert abs(fine[0].t_start - 1.5) <= 0.001 + 1e-9


def test_identical_starts_conflict_at_zero():
    a = cruiser(1, 1, 0, 0, 0)
    b = cruiser(1, 1, 0, 0, 1)
    out = validate_plan(Plan((coast(a, 1), coast(b, 1))), [], 0.1)
    assert out[0].t_start == 0


def test_obstacle_hit_is_an_error():
    a = cruiser(0, 0, 0, 1, 0)
    wall = ConvexPolygon.rectangle(2, -1, 3, 1)
    with pytest.raises(InvalidPlanError) as e:
        validate_plan(Plan((coast(a, 3),)), [wall], 0.1)
    assert e.value.robot == 0
    assert 1.6 <= e.value.time <= 1.8


def test_single_sample_conflict_and_sorting():
    # b crosses a's lane briefly, then c sits on a's path later
    a = cruiser(0, 0, 0, 1, 0)
    b = cruiser(2, -3, math.pi / 2, 2, 1)
    c = cruiser(4, 0.2, 0, 0, 2)
    plan = Plan((coast(a, 3.5), coast(b, 4), coast(c, 4)))
    out = validate_plan(plan, [], 0.1)
    assert [(k.t_start, k.i, k.j) for k in out] == sorted((k.t_start, k.i, k.j) for k in out)
    assert {k.pair for k in out} == {(0, 1), (0, 2)}
    for k in out:
        assert 0 <= k.t_start <= k.t_end


def test_straight_line_first_contact():
    for a, b, t in straight_line_instances(50, seed=11):
        plan = Plan((coast(a, 6), coast(b, 6)))
        out = validate_plan(plan, [], 0.1)
        assert out, f"missed contact at {t}"
        assert abs(out[0].t_start - t) <= 0.1 + 1e-9
        prev = -1.0
        for k in out:
            assert k.t_start > prev
            prev = k.t_end


def test_first_contact_helper_against_shapely():
    for a, b, t in straight_line_instances(10, seed=4):
        ta, tb = coast(a, 6), coast(b, 6)

        def touching(s):
            pa = body_polygon(0.7, 0.5, *ta.state_at(s)[:3])
            pb = body_polygon(0.7, 0.5, *tb.state_at(s)[:3])
            return pa.intersects(pb)

        assert touching(t + 1e-6)
        assert not touching(max(0.0, t - 1e-3)) or t < 1e-3


def test_make_constraints_duality():
    a = cruiser(0, 0, 0, 1, 0)
    b = cruiser(3, 0.1, -math.pi, 1, 1)
    plan = Plan((coast(a, 3), coast(b, 3)))
    k = Conflict(0, 1, 1.0, 2.0)
    ci, cj = make_constraints(k, plan)
    assert (ci.robot, ci.other, cj.robot, cj.other) == (0, 1, 1, 0)
    assert ci.interval == cj.interval == (1.0, 2.0)
    assert ci.shadow is plan[1] and cj.shadow is plan[0]
    got = ci.shadow_polygons(1.5)[0]
    want = body_polygon(0.7, 0.5, *plan[1].state_at(1.5)[:3])
    assert Polygon(got.vertices).symmetric_difference(want).area < 1e-12


def test_motion_violation_filters():
    a = cruiser(0, 0, 0, 1, 0)
    b = cruiser(1, 0, 0, 0, 1)
    shadow = coast(b, 1)
    con = Constraint(0, 1, 0.0, 1.0, shadow)
    assert motion_violates_constraints(a, a.start, (0, 0), 1.0, 0.0, [], 0.1) is None
    assert motion_violates_constraints(a, a.start, (0, 0), 1.0, 2.0, [con], 0.1) is None
    assert motion_violates_constraints(a, a.start, (0, 0), 1.0, 0.0, [con], 0.1) is con


def _brute_force(model, start, u, dur, t0, cons, dt):
    local = Trajectory(model, start, [Segment(u, dur)])
    times = [t0] + [m * dt for m in range(int(t0 / dt) + 1, int((t0 + dur) / dt) + 2)
                    if t0 < m * dt < t0 + dur - 1e-9] + [t0 + dur]
    for t in times:
        x = local.state_at(max(0.0, t - t0))
        mine = body_polygon(0.7, 0.5, *x[:3])
        for c in cons:
            if not c.t_start - 1e-9 <= t <= c.t_end + 1e-9:
                continue
            y = c.shadow.state_at(t)
            if mine.intersects(body_polygon(0.7, 0.5, *y[:3])):
                return c
    return None


def test_motion_violation_brute_force():
    rng = random.Random(8)
    hits = 0
    for _ in range(150):
        cons = []
        for q in range(3):
            o = cruiser(rng.uniform(0, 4), rng.uniform(-2, 2), rng.uniform(-3, 3), rng.uniform(0, 1.5), q + 1)
            lo = 0.1 * rng.randint(0, 30)
            cons.append(Constraint(0, q + 1, lo, lo + 0.1 * rng.randint(0, 20), coast(o, 4)))
        m = cruiser(0, 0, rng.uniform(-1, 1), rng.uniform(0.5, 2), 0)
        u = (rng.uniform(-1, 1), rng.uniform(-0.5, 0.5))
        dur = 0.05 * rng.randint(1, 40)
        t0 = 0.05 * rng.randint(0, 40)
        got = motion_violates_constraints(m, m.start, u, dur, t0, cons, 0.1)
        want = _brute_force(m, m.start, u, dur, t0, cons, 0.1)
        assert got is want
        hits += got is not None
    assert hits > 10


def test_verify_plan_matches_oracle():
    a = cruiser(0, 0, 0, 1, 0, goal=(3, 0), radius=0.5)
    b = cruiser(3, 2, -math.pi, 1, 1, goal=(0, 2), radius=0.5)
    plan = Plan((coast(a, 3), coast(b, 3)))
    assert verify_plan(plan, [], 0.01) == [] == check_plan(plan, [], 0.01)
    c = cruiser(3, 0.3, -math.pi, 1, 1, goal=(9, 9), radius=0.5)
    bad = Plan((coast(a, 3), coast(c, 3)))
    assert verify_plan(bad, [], 0.01) and check_plan(bad, [], 0.01)
