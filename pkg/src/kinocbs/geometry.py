"""Planar workspace, convex obstacles, rectangular robot bodies and SAT tests.

Everything here works on plain tuples of floats. The planners call these
functions millions of times per solve, so the hot paths avoid numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

Point = tuple[float, float]

GEOM_TOL = 1e-9


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Workspace:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise GeometryError(f"degenerate workspace bounds {self}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def contains_point(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax


def signed_area(vertices: Sequence[Point]) -> float:
    """Shoelace area, positive for counter-clockwise order."""
    n = len(vertices)
    s = 0.0
    for k in range(n):
        x0, y0 = vertices[k]
        x1, y1 = vertices[(k + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _edge_axes(vertices: Sequence[Point]) -> tuple[Point, ...]:
    # Outward normals are not needed for overlap tests, only directions.
    n = len(vertices)
    axes = []
    for k in range(n):
        x0, y0 = vertices[k]
        x1, y1 = vertices[(k + 1) % n]
        axes.append((y0 - y1, x1 - x0))
    return tuple(axes)


@dataclass(frozen=True)
class ConvexPolygon:
    """Closed convex polygon with counter-clockwise vertices."""

    vertices: tuple[Point, ...]
    axes: tuple[Point, ...] = field(init=False, repr=False, compare=False)
    bbox: tuple[float, float, float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise GeometryError("a polygon needs at least 3 vertices")
        n = len(verts)
        for k in range(n):
            ax, ay = verts[k]
            bx, by = verts[(k + 1) % n]
            cx, cy = verts[(k + 2) % n]
            cross = (bx - ax) * (cy - by) - (by - ay) * (cx - bx)
            if cross <= GEOM_TOL:
                raise GeometryError(
                    "vertices must be strictly convex and counter-clockwise "
                    f"(turn at vertex {(k + 1) % n} is {cross:.3g})"
                )
        object.__setattr__(self, "axes", _edge_axes(verts))
        xs = [v[0] for v in verts]
        ys = [v[1] for v in verts]
        object.__setattr__(self, "bbox", (min(xs), min(ys), max(xs), max(ys)))

    @classmethod
    def rectangle(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> "ConvexPolygon":
        return cls(((xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)))

    @property
    def area(self) -> float:
        return signed_area(self.vertices)


@dataclass(frozen=True)
class BodySpec:
    """Rectangular robot body, centred on the reference point."""

    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise GeometryError(f"body dimensions must be positive, got {self}")

    @property
    def circumradius(self) -> float:
        return 0.5 * math.hypot(self.length, self.width)

    def inflated(self, margin: float) -> "BodySpec":
        if margin <= 0.0:
            return self
        return BodySpec(self.length + 2.0 * margin, self.width + 2.0 * margin)


def rect_corners(length: float, width: float, x: float, y: float, theta: float) -> tuple[Point, ...]:
    """Counter-clockwise corners of a rectangle centred at (x, y) with heading theta."""
    c = math.cos(theta)
    s = math.sin(theta)
    hl = 0.5 * length
    hw = 0.5 * width
    ax, ay = hl * c, hl * s
    bx, by = -hw * s, hw * c
    return (
        (x + ax - bx, y + ay - by),
        (x + ax + bx, y + ay + by),
        (x - ax + bx, y - ay + by),
        (x - ax - bx, y - ay - by),
    )


def footprint(body: BodySpec, pose: tuple[float, float, float]) -> ConvexPolygon:
    x, y, theta = pose
    return ConvexPolygon(rect_corners(body.length, body.width, x, y, theta))


def _separated_on(axes, a: Sequence[Point], b: Sequence[Point]) -> bool:
    for nx, ny in axes:
        amin = amax = a[0][0] * nx + a[0][1] * ny
        for px, py in a[1:]:
            d = px * nx + py * ny
            if d < amin:
                amin = d
            elif d > amax:
                amax = d
        bmin = bmax = b[0][0] * nx + b[0][1] * ny
        for px, py in b[1:]:
            d = px * nx + py * ny
            if d < bmin:
                bmin = d
            elif d > bmax:
                bmax = d
        # touching (equal projections) is not a separation
        if amax < bmin or bmax < amin:
            return True
    return False


def rect_axes(corners: Sequence[Point]) -> tuple[Point, Point]:
    (x0, y0), (x1, y1), (x2, y2) = corners[0], corners[1], corners[2]
    return ((y0 - y1, x1 - x0), (y1 - y2, x2 - x1))


def vertices_intersect(a: Sequence[Point], a_axes, b: Sequence[Point], b_axes) -> bool:
    return not (_separated_on(a_axes, a, b) or _separated_on(b_axes, a, b))


def rects_intersect(a: Sequence[Point], b: Sequence[Point]) -> bool:
    """SAT for two rectangles given by corner tuples."""
    return vertices_intersect(a, rect_axes(a), b, rect_axes(b))


def polygons_intersect(a: ConvexPolygon, b: ConvexPolygon) -> bool:
    ax0, ay0, ax1, ay1 = a.bbox
    bx0, by0, bx1, by1 = b.bbox
    if ax1 < bx0 or bx1 < ax0 or ay1 < by0 or by1 < ay0:
        return False
    return vertices_intersect(a.vertices, a.axes, b.vertices, b.axes)


def corners_hit_obstacle(corners: Sequence[Point], obstacle: ConvexPolygon) -> bool:
    ox0, oy0, ox1, oy1 = obstacle.bbox
    xs = [c[0] for c in corners]
    if max(xs) < ox0 or min(xs) > ox1:
        return False
    ys = [c[1] for c in corners]
    if max(ys) < oy0 or min(ys) > oy1:
        return False
    return vertices_intersect(corners, rect_axes(corners), obstacle.vertices, obstacle.axes)


def corners_inside(corners: Sequence[Point], w: Workspace) -> bool:
    for x, y in corners:
        if x < w.xmin or x > w.xmax or y < w.ymin or y > w.ymax:
            return False
    return True


def inside_workspace(p: ConvexPolygon, w: Workspace) -> bool:
    return corners_inside(p.vertices, w)
