import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afar_twin.geodesy import (EARTH_RADIUS_M, NE, NW, SE, SW, EnuPoint, GeoPoint, GeoRect, Segment,
                               clamp_to_rect, contains, horizontal_distance, nearest_corner, rect_from_enu,
                               rect_intersection, rect_quadrant, segment_intersection, to_enu, to_geo)

O = GeoPoint(35.7, -78.7, 0.0)
offsets = st.floats(-1000.0, 1000.0)


def test_origin_maps_to_zero():
    e = to_enu(O, O)
    assert (e.x, e.y, e.z) == (0.0, 0.0, 0.0)
    assert to_geo(EnuPoint(0, 0, 0), O) == O


def test_north_and_east_offsets():
    # independent oracle: arc length on a sphere of radius 6371 km
    north = EARTH_RADIUS_M * 0.001 * math.pi / 180
    east = north * math.cos(math.radians(35.7))
    e = to_enu(GeoPoint(35.701, -78.7), O)
    assert e.y == pytest.approx(111.195, abs=0.01)
    assert e.y == pytest.approx(north, abs=1e-9)
    assert e.x == pytest.approx(0.0, abs=0.01)
    e = to_enu(GeoPoint(35.7, -78.699), O)
    assert e.x == pytest.approx(90.30, abs=0.05)
    assert e.x == pytest.approx(east, abs=1e-6)


def test_to_geo_inverse_example():
    g = to_geo(EnuPoint(90.30, 111.195, 0.0), O)
    assert g.lat - O.lat == pytest.approx(0.001, abs=1e-6)
    assert g.lon - O.lon == pytest.approx(0.001, abs=1e-6)


@given(offsets, offsets, st.floats(0, 110))
def test_round_trip(x, y, z):
    p = to_geo(EnuPoint(x, y, z), O)
    q = to_geo(to_enu(p, O), O)
    assert abs(q.lat - p.lat) < 1e-9 and abs(q.lon - p.lon) < 1e-9 and abs(q.alt - p.alt) < 1e-9


def test_pure_north_distance_any_latitude():
    for lat in (-60.0, 0.0, 35.7, 70.0):
        assert horizontal_distance(GeoPoint(lat, 10.0), GeoPoint(lat + 0.001, 10.0)) == pytest.approx(111.195, abs=0.01)
    assert horizontal_distance(O, O) == 0.0


@settings(max_examples=200)
@given(*[offsets] * 6)
def test_distance_is_a_metric(ax, ay, bx, by, cx, cy):
    a, b, c = (to_geo(EnuPoint(x, y), O) for x, y in ((ax, ay), (bx, by), (cx, cy)))
    ab, ba = horizontal_distance(a, b), horizontal_distance(b, a)
    assert ab >= 0
    assert abs(ab - ba) < 1e-6
    assert horizontal_distance(a, c) <= ab + horizontal_distance(b, c) + 1e-3


def seg(ax, ay, bx, by):
    return Segment(EnuPoint(ax, ay), EnuPoint(bx, by))


def test_segment_examples():
    p = segment_intersection(seg(0, 0, 0, 10), seg(-5, 5, 5, 5))
    assert (p.x, p.y) == pytest.approx((0, 5))
    p = segment_intersection(seg(0, 0, 10, 10), seg(0, 10, 10, 0))
    assert (p.x, p.y) == pytest.approx((5, 5))
    assert segment_intersection(seg(0, 0, 1, 0), seg(0, 1, 1, 1)) is None
    assert segment_intersection(seg(0, 0, 2, 0), seg(1, 0, 3, 0)) is None
    assert segment_intersection(seg(0, 0, 1, 0), seg(5, -1, 5, 1)) is None


def test_degenerate_segment_rejected():
    with pytest.raises(ValueError):
        seg(1, 1, 1, 1)


coords = st.floats(-100, 100)


@settings(max_examples=300)
@given(*[coords] * 8)
def test_intersection_lies_on_both_segments(a, b, c, d, e, f, g, h):
    if math.hypot(c - a, d - b) < 1e-3 or math.hypot(g - e, h - f) < 1e-3:
        return
    s1, s2 = seg(a, b, c, d), seg(e, f, g, h)
    p = segment_intersection(s1, s2)
    if p is None:
        return
    for s in (s1, s2):
        dx, dy = s.b.x - s.a.x, s.b.y - s.a.y
        L2 = dx * dx + dy * dy
        t = ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / L2
        assert -1e-9 <= t <= 1 + 1e-9
        # residual from the parametric point
        assert math.hypot(s.a.x + t * dx - p.x, s.a.y + t * dy - p.y) < 1e-9


def test_rectangle_validation():
    with pytest.raises(ValueError):
        GeoRect(1, 0, 0, 1)
    with pytest.raises(ValueError):
        GeoRect(0, 0, 1, 1, 20, 20)
    with pytest.raises(ValueError):
        GeoPoint(91, 0)


def test_contains_closed_boundary():
    r = rect_from_enu(0, 0, 300, 300, O, 20, 110)
    for c in r.corners(50):
        assert contains(r, c, check_alt=True)
    assert contains(r, r.center)
    east = to_enu(GeoPoint(r.center.lat, r.east), O)
    outside = to_geo(EnuPoint(east.x + 1, east.y), O)
    assert not contains(r, outside)
    assert not contains(r, GeoPoint(r.center.lat, r.center.lon, 5), check_alt=True)


def test_quadrant_nw_example():
    r = rect_from_enu(0, 0, 300, 300, O, decimals=None)
    q = rect_quadrant(r, NW)
    sw = to_enu(GeoPoint(q.south, q.west), O)
    ne = to_enu(GeoPoint(q.north, q.east), O)
    assert (sw.x, sw.y) == pytest.approx((0, 150), abs=1e-6)
    assert (ne.x, ne.y) == pytest.approx((150, 300), abs=1e-6)


def area(r):
    return (r.north - r.south) * (r.east - r.west)


def test_quadrants_tile_rectangle():
    r = GeoRect(35.0, -79.0, 35.01, -78.98, 20, 110)
    qs = [rect_quadrant(r, i) for i in (SW, SE, NE, NW)]
    assert sum(area(q) for q in qs) == pytest.approx(area(r), rel=1e-12)
    for q in qs:
        assert area(q) == pytest.approx(area(r) / 4, rel=1e-9)
        assert (q.alt_min, q.alt_max) == (20, 110)
    for i in range(4):
        for j in range(i + 1, 4):
            inter = rect_intersection(qs[i], qs[j])
            assert inter is None
    nested = rect_quadrant(rect_quadrant(r, NE), NE)
    assert nested.north - nested.south == pytest.approx((r.north - r.south) / 4)
    with pytest.raises(ValueError):
        rect_quadrant(r, 4)


def test_nearest_corner_and_clamp():
    r = rect_from_enu(0, 0, 300, 300, O)
    assert nearest_corner(r, to_geo(EnuPoint(40, 260), O)) == NW
    assert nearest_corner(r, to_geo(EnuPoint(290, 10), O)) == SE
    p = clamp_to_rect(GeoPoint(r.north + 1, r.west - 1, 500), GeoRect(r.south, r.west, r.north, r.east, 20, 110))
    assert (p.lat, p.lon, p.alt) == (r.north, r.west, 110)
