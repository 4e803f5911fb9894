"""Small builders shared by the tests."""

import math

from kinocbs.dynamics import second_order_car
from kinocbs.geometry import BodySpec, Workspace
from kinocbs.trajectory import Segment, Trajectory

BIG = Workspace(-100, 100, -100, 100)


def cruiser(x, y, theta, v, member=0, body=BodySpec(0.7, 0.5), goal=None, radius=1.0):
    """Second-order car with a goal at ``goal`` (defaults to its start)."""
    goal = goal if goal is not None else (x, y)
    return second_order_car(f"r{member}", (x, y, theta, v, 0.0), goal, radius, BIG, body=body, member=member)


def coast(model, duration, step=0.05):
    """Trajectory with zero control: constant speed, straight line."""
    n = round(duration / step)
    segs = [Segment((0.0,) * model.control_space.dim, n * step)] if n else []
    return Trajectory(model, model.start, segs, step)


def straight_end(model, duration):
    x, y, th, v, _ = model.start
    return (x + v * duration * math.cos(th), y + v * duration * math.sin(th))


HEADINGS = (0.0, math.pi / 2, -math.pi, -math.pi / 2)


def _overlap_window(p, q, vp, vq, reach):
    """Times when |(p + vp t) - (q + vq t)| <= reach, as (lo, hi) or None."""
    d = p - q
    w = vp - vq
    if abs(w) < 1e-12:
        return (-math.inf, math.inf) if abs(d) <= reach else None
    a, b = (-reach - d) / w, (reach - d) / w
    return (min(a, b), max(a, b))


def first_contact(a, b):
    """Analytic contact window (first, last touching time) of two axis-aligned cruisers, or None."""
    def extents(m):
        x, y, th, v, _ = m.start
        L, W = m.bodies[0].body.length, m.bodies[0].body.width
        horizontal = abs(math.sin(th)) < 0.5
        hx, hy = (L / 2, W / 2) if horizontal else (W / 2, L / 2)
        return x, y, v * round(math.cos(th)), v * round(math.sin(th)), hx, hy

    xa, ya, vxa, vya, hxa, hya = extents(a)
    xb, yb, vxb, vyb, hxb, hyb = extents(b)
    wx = _overlap_window(xa, xb, vxa, vxb, hxa + hxb)
    wy = _overlap_window(ya, yb, vya, vyb, hya + hyb)
    if wx is None or wy is None:
        return None
    lo, hi = max(wx[0], wy[0], 0.0), min(wx[1], wy[1])
    return (lo, hi) if lo <= hi else None


def straight_line_instances(n, seed, horizon=6.0, min_contact=0.25):
    """``n`` two-robot axis-aligned instances with first contact inside (0.3, horizon - 1).

    Contacts shorter than ``min_contact`` are skipped: a sampled validator cannot see them.
    """
    import random

    rng = random.Random(seed)
    out = []
    while len(out) < n:
        a = cruiser(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.choice(HEADINGS), rng.uniform(0.2, 2.0), 0)
        b = cruiser(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.choice(HEADINGS), rng.uniform(0.2, 2.0), 1)
        w = first_contact(a, b)
        if w is None or not 0.3 < w[0] < horizon - 1 or min(w[1], horizon) - w[0] < min_contact:
            continue
        out.append((a, b, w[0]))
    return out
