"""Planar geometry primitives shared by the building model, planner, and
line-of-sight checks.

Everything here works on plain (x, y) float tuples and lists of vertices;
polygons are implicitly closed (last vertex connects back to the first).
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

Point = tuple[float, float]
Polygon = Sequence[Point]


def polygon_area(vertices: Polygon) -> float:
    """Unsigned shoelace area of a simple polygon."""
    total = 0.0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return abs(total) / 2.0


def polygon_bounds(vertices: Polygon) -> tuple[float, float, float, float]:
    xs = [p[0] for p in vertices]
    ys = [p[1] for p in vertices]
    return min(xs), min(ys), max(xs), max(ys)


def point_in_polygon(x: float, y: float, vertices: Polygon) -> bool:
    """Even-odd ray casting test, inclusive of the boundary.

    A horizontal ray is cast to +x. Points lying on an edge (within a tiny
    tolerance) count as inside so that touching geometry is not lost to
    floating-point jitter.
    """
    n = len(vertices)
    inside = False
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        if _on_segment(x, y, x1, y1, x2, y2):
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def _on_segment(px: float, py: float, x1: float, y1: float, x2: float, y2: float,
                eps: float = 1e-12) -> bool:
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    if abs(cross) > eps * max(1.0, abs(x2 - x1) + abs(y2 - y1)):
        return False
    dot = (px - x1) * (x2 - x1) + (py - y1) * (y2 - y1)
    length_sq = (x2 - x1) ** 2 + (y2 - y1) ** 2
    return -eps <= dot <= length_sq + eps


def point_segment_distance(px: float, py: float, x1: float, y1: float,
                           x2: float, y2: float) -> float:
    dx, dy = x2 - x1, y2 - y1
    length_sq = dx * dx + dy * dy
    if length_sq == 0.0:
        return math.hypot(px - x1, py - y1)
    t = ((px - x1) * dx + (py - y1) * dy) / length_sq
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (x1 + t * dx), py - (y1 + t * dy))


def point_polygon_distance(x: float, y: float, vertices: Polygon) -> float:
    """Distance from a point to a polygon footprint; 0 inside or on it."""
    if point_in_polygon(x, y, vertices):
        return 0.0
    n = len(vertices)
    best = math.inf
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        d = point_segment_distance(x, y, x1, y1, x2, y2)
        if d < best:
            best = d
    return best


def segments_intersect(a1: Point, a2: Point, b1: Point, b2: Point) -> bool:
    """True if closed segments a1-a2 and b1-b2 share any point."""
    d1 = _orient(b1, b2, a1)
    d2 = _orient(b1, b2, a2)
    d3 = _orient(a1, a2, b1)
    d4 = _orient(a1, a2, b2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
       ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _within_bbox(a1, b1, b2):
        return True
    if d2 == 0 and _within_bbox(a2, b1, b2):
        return True
    if d3 == 0 and _within_bbox(b1, a1, a2):
        return True
    if d4 == 0 and _within_bbox(b2, a1, a2):
        return True
    return False


def _orient(p: Point, q: Point, r: Point) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _within_bbox(p: Point, a: Point, b: Point) -> bool:
    return (min(a[0], b[0]) - 1e-12 <= p[0] <= max(a[0], b[0]) + 1e-12 and
            min(a[1], b[1]) - 1e-12 <= p[1] <= max(a[1], b[1]) + 1e-12)


def segment_crosses_polygon(p1: Point, p2: Point, vertices: Polygon,
                            bounds: tuple[float, float, float, float] | None = None
                            ) -> bool:
    """True if the segment touches the polygon interior or boundary.

    `bounds` (the polygon's bbox) lets hot callers skip disjoint geometry.
    """
    if bounds is not None:
        bx0, by0, bx1, by1 = bounds
        if (max(p1[0], p2[0]) < bx0 or min(p1[0], p2[0]) > bx1
                or max(p1[1], p2[1]) < by0 or min(p1[1], p2[1]) > by1):
            return False
    n = len(vertices)
    for i in range(n):
        if segments_intersect(p1, p2, vertices[i], vertices[(i + 1) % n]):
            return True
    # fully inside with no edge crossing
    mx, my = (p1[0] + p2[0]) / 2.0, (p1[1] + p2[1]) / 2.0
    return point_in_polygon(mx, my, vertices)


def is_simple_polygon(vertices: Polygon) -> bool:
    """Check that no two non-adjacent edges intersect and no edge degenerates."""
    n = len(vertices)
    if n < 3:
        return False
    for i in range(n):
        a1, a2 = vertices[i], vertices[(i + 1) % n]
        if a1 == a2:
            return False
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = vertices[j], vertices[(j + 1) % n]
            if segments_intersect(a1, a2, b1, b2):
                return False
    return True


def sample_segment(p1: Point, p2: Point, step: float) -> Iterable[Point]:
    """Yield points along p1..p2 at most `step` apart, endpoints included."""
    dist = math.hypot(p2[0] - p1[0], p2[1] - p1[1])
    n = max(1, math.ceil(dist / step))
    for i in range(n + 1):
        t = i / n
        yield (p1[0] + t * (p2[0] - p1[0]), p1[1] + t * (p2[1] - p1[1]))


def points_in_polygon_array(xx: np.ndarray, yy: np.ndarray,
                            vertices: Polygon) -> np.ndarray:
    """Vectorized even-odd crossing test over arrays of points."""
    inside = np.zeros(xx.shape, dtype=bool)
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        if y2 == y1:
            continue
        crosses = (y1 > yy) != (y2 > yy)
        x_cross = x1 + (yy - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (xx < x_cross)
    return inside


def points_within_polygon_distance(xx: np.ndarray, yy: np.ndarray,
                                   vertices: Polygon,
                                   radius: float) -> np.ndarray:
    """Points inside the polygon or closer than `radius` to its boundary."""
    hit = points_in_polygon_array(xx, yy, vertices)
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        length_sq = dx * dx + dy * dy
        if length_sq == 0.0:
            dist = np.hypot(xx - x1, yy - y1)
        else:
            t = np.clip(((xx - x1) * dx + (yy - y1) * dy) / length_sq, 0.0, 1.0)
            dist = np.hypot(xx - (x1 + t * dx), yy - (y1 + t * dy))
        hit |= dist < radius
    return hit
