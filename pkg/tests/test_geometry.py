import math
import random

import pytest
from shapely.geometry import LineString, Point, Polygon

from sitewalk import geometry

SQUARE = [(0, 0), (4, 0), (4, 4), (0, 4)]
L_SHAPE = [(0, 0), (4, 0), (4, 2), (2, 2), (2, 4), (0, 4)]


def test_polygon_area_square():
    assert geometry.polygon_area(SQUARE) == 16.0


def test_polygon_area_l_shape():
    assert geometry.polygon_area(L_SHAPE) == 12.0


def test_polygon_area_orientation_independent():
    assert geometry.polygon_area(list(reversed(SQUARE))) == 16.0


def test_point_in_polygon_against_shapely():
    rng = random.Random(7)
    for poly in (SQUARE, L_SHAPE):
        shp = Polygon(poly)
        for _ in range(500):
            x = rng.uniform(-1, 5)
            y = rng.uniform(-1, 5)
            expected = shp.contains(Point(x, y)) or shp.touches(Point(x, y))
            assert geometry.point_in_polygon(x, y, poly) == expected, (x, y)


def test_point_in_polygon_boundary_inclusive():
    assert geometry.point_in_polygon(0, 0, SQUARE)
    assert geometry.point_in_polygon(2, 0, SQUARE)
    assert geometry.point_in_polygon(4, 4, SQUARE)


def test_point_polygon_distance_against_shapely():
    rng = random.Random(11)
    shp = Polygon(L_SHAPE)
    for _ in range(500):
        x = rng.uniform(-2, 6)
        y = rng.uniform(-2, 6)
        got = geometry.point_polygon_distance(x, y, L_SHAPE)
        expected = 0.0 if shp.intersects(Point(x, y)) else shp.exterior.distance(Point(x, y))
        assert got == pytest.approx(expected, abs=1e-9)


def test_segment_distance_endpoints_and_interior():
    assert geometry.point_segment_distance(0, 1, 0, 0, 2, 0) == 1.0
    assert geometry.point_segment_distance(-1, 0, 0, 0, 2, 0) == 1.0
    assert geometry.point_segment_distance(3, 4, 0, 0, 0, 0) == 5.0


def test_segments_intersect_against_shapely():
    rng = random.Random(3)
    for _ in range(800):
        a = [(rng.uniform(0, 4), rng.uniform(0, 4)) for _ in range(2)]
        b = [(rng.uniform(0, 4), rng.uniform(0, 4)) for _ in range(2)]
        expected = LineString(a).intersects(LineString(b))
        assert geometry.segments_intersect(a[0], a[1], b[0], b[1]) == expected


def test_segments_intersect_touching_endpoint():
    assert geometry.segments_intersect((0, 0), (1, 0), (1, 0), (2, 5))
    assert geometry.segments_intersect((0, 0), (2, 0), (1, 0), (1, 3))


def test_segment_crosses_polygon():
    assert geometry.segment_crosses_polygon((-1, 2), (5, 2), SQUARE)
    assert not geometry.segment_crosses_polygon((-1, 5), (5, 5), SQUARE)
    # fully inside counts as crossing
    assert geometry.segment_crosses_polygon((1, 1), (2, 2), SQUARE)


def test_is_simple_polygon():
    assert geometry.is_simple_polygon(SQUARE)
    assert geometry.is_simple_polygon(L_SHAPE)
    bowtie = [(0, 0), (2, 2), (2, 0), (0, 2)]
    assert not geometry.is_simple_polygon(bowtie)
    assert not geometry.is_simple_polygon([(0, 0), (1, 1)])


def test_sample_segment_spacing():
    pts = list(geometry.sample_segment((0, 0), (1, 0), 0.3))
    assert pts[0] == (0, 0)
    assert pts[-1] == (1, 0)
    for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
        assert math.hypot(x2 - x1, y2 - y1) <= 0.3 + 1e-12


def test_array_point_in_polygon_matches_scalar():
    import numpy as np
    rng = random.Random(5)
    xs = np.array([rng.uniform(-1, 5) for _ in range(400)])
    ys = np.array([rng.uniform(-1, 5) for _ in range(400)])
    got = geometry.points_in_polygon_array(xs, ys, L_SHAPE)
    for i in range(len(xs)):
        scalar = geometry.point_in_polygon(float(xs[i]), float(ys[i]), L_SHAPE)
        # array variant is exclusive of boundaries; random points never land
        # exactly on one, so both must agree
        assert bool(got[i]) == scalar


def test_array_distance_matches_scalar():
    import numpy as np
    rng = random.Random(6)
    xs = np.array([rng.uniform(-2, 6) for _ in range(400)])
    ys = np.array([rng.uniform(-2, 6) for _ in range(400)])
    got = geometry.points_within_polygon_distance(xs, ys, SQUARE, 0.5)
    for i in range(len(xs)):
        d = geometry.point_polygon_distance(float(xs[i]), float(ys[i]), SQUARE)
        assert bool(got[i]) == (d < 0.5)
