import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinocbs.dynamics import compose, propagate
from kinocbs.trajectory import (
    Segment,
    Trajectory,
    TrajectoryError,
    duration,
    join_trajectories,
    sample_grid,
    split_trajectory,
    state_at,
)
from helpers import coast, cruiser


def test_state_at_zero_is_start():
    m = cruiser(1, 2, 0.3, 0.5)
    t = Trajectory(m, m.start, [Segment((0.3, 0.1), 0.5)])
    assert state_at(t, 0) == m.start


def test_hold_at_end():
    m = cruiser(0, 0, 0, 1)
    t = coast(m, 3.0)
    assert t.state_at(10)[:2] == pytest.approx((3, 0), abs=1e-12)
    assert t.state_at(10) == t.state_at(3.0)


def test_two_segment_closed_form():
    m = cruiser(0, 0, 0, 0)
    t = Trajectory(m, m.start, [Segment((1, 0), 1.0), Segment((0, 0), 1.0)])
    assert t.state_at(2.0)[0] == pytest.approx(1.5, abs=1e-6)
    assert t.state_at(1.5)[0] == pytest.approx(0.5 + 0.5, abs=1e-6)


def test_duration_examples():
    m = cruiser(0, 0, 0, 0)
    assert duration(Trajectory(m, m.start, [])) == 0
    assert duration(Trajectory(m, m.start, [Segment((0, 0), 1.5), Segment((0, 0), 2.5)])) == 4.0
    rng = random.Random(3)
    durs = [0.05 * rng.randint(1, 20) for _ in range(30)]
    t = Trajectory(m, m.start, [Segment((0, 0), d) for d in durs])
    acc = 0.0
    for d in durs:
        acc += d
    assert abs(t.duration - acc) < 1e-12


def test_segment_validation():
    with pytest.raises(TrajectoryError):
        Segment((0, 0), 0)
    m = cruiser(0, 0, 0, 0)
    with pytest.raises(TrajectoryError):
        Trajectory(m, m.start, [Segment((0, 0), 0.07)])
    with pytest.raises(TrajectoryError):
        coast(m, 1).state_at(-0.1)


def test_sample_grid_examples():
    assert sample_grid(1, 0.5) == [0, 0.5, 1]
    g = sample_grid(1, 0.3)
    assert len(g) == 5 and g[-1] == 1 and g[:4] == pytest.approx([0, 0.3, 0.6, 0.9])
    assert sample_grid(0, 0.1) == [0]


def _random_traj(rng, n=6):
    m = cruiser(0, 0, rng.uniform(-3, 3), rng.uniform(-1, 2))
    segs = [Segment((rng.uniform(-1, 1), rng.uniform(-0.5, 0.5)), 0.05 * rng.randint(1, 20)) for _ in range(n)]
    return Trajectory(m, m.start, segs)


def test_sampled_states_match_state_at():
    rng = random.Random(5)
    t = _random_traj(rng)
    for time, x in t.sample_times(t.duration + 1, 0.07):
        assert x == pytest.approx(t.state_at(time), abs=1e-9)
    assert t.sample_times(t.duration, 0.1)[-1][1] == t.final_state


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_boundary_replay_consistent(seed):
    rng = random.Random(seed)
    t = _random_traj(rng)
    b = 0.0
    x = t.start
    for seg in t.segments:
        x = propagate(t.model, x, seg.control, seg.duration, t.step)
        b += seg.duration
        assert t.state_at(b) == pytest.approx(x, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 50), st.floats(0, 50))
def test_hold_is_exact(seed, a, b):
    t = _random_traj(random.Random(seed))
    assert t.state_at(t.duration + a) == t.state_at(t.duration + b)


def test_cached_states_follow_dynamics():
    t = _random_traj(random.Random(9))
    assert t.states[0] == t.start
    k = 0
    for seg in t.segments:
        for _ in range(round(seg.duration / t.step)):
            assert t.states[k + 1] == propagate(t.model, t.states[k], seg.control, t.step, t.step)
            k += 1


def test_split_join_round_trip():
    rng = random.Random(2)
    a = cruiser(0, 0, 0.2, 0.5, member=0)
    b = cruiser(3, 1, -1.0, 1.0, member=1)
    ab = compose(a, b)
    segs = [Segment((rng.uniform(-1, 1), rng.uniform(-.5, .5), rng.uniform(-1, 1), rng.uniform(-.5, .5)),
                    0.05 * rng.randint(1, 20)) for _ in range(8)]
    joint = Trajectory(ab, ab.start, segs)
    pa, pb = split_trajectory(joint)
    for k in range(joint.num_steps + 1):
        assert joint.states[k] == pa.states[k] + pb.states[k]
    back = join_trajectories(ab, [pa, pb])
    assert back.states == joint.states
