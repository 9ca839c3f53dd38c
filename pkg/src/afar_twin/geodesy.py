"""Local-frame geometry for the search area.

Positions are carried as WGS-84 latitude/longitude and converted to a local
east/north/up frame with an equirectangular projection.  Over the few hundred
meters of a search area the projection error is well below a centimeter, which
keeps every geofence and chord computation linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0

# corner order is counter-clockwise starting at the south-west corner
SW, SE, NE, NW = 0, 1, 2, 3
CORNER_NAMES = ("SW", "SE", "NE", "NW")


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"coordinates out of range: lat={self.lat} lon={self.lon}")


@dataclass(frozen=True)
class EnuPoint:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite ENU point ({self.x}, {self.y}, {self.z})")


@dataclass(frozen=True)
class GeoRect:
    """Closed lat/lon rectangle with an altitude band."""

    south: float
    west: float
    north: float
    east: float
    alt_min: float = 0.0
    alt_max: float = 1.0

    def __post_init__(self):
        if not (self.south < self.north and self.west < self.east):
            raise ValueError(f"degenerate rectangle {self}")
        if not self.alt_min < self.alt_max:
            raise ValueError(f"altitude band must satisfy alt_min < alt_max, got {self.alt_min}..{self.alt_max}")

    @property
    def center(self) -> GeoPoint:
        return GeoPoint((self.south + self.north) / 2.0, (self.west + self.east) / 2.0, self.alt_min)

    def corner(self, index: int, alt: float | None = None) -> GeoPoint:
        alt = self.alt_min if alt is None else alt
        lat = self.south if index in (SW, SE) else self.north
        lon = self.west if index in (SW, NW) else self.east
        return GeoPoint(lat, lon, alt)

    def corners(self, alt: float | None = None) -> list[GeoPoint]:
        return [self.corner(i, alt) for i in range(4)]


@dataclass(frozen=True)
class Segment:
    a: EnuPoint
    b: EnuPoint

    def __post_init__(self):
        if self.a.x == self.b.x and self.a.y == self.b.y:
            raise ValueError("segment endpoints coincide")


def to_enu(p: GeoPoint, origin: GeoPoint) -> EnuPoint:
    """Project `p` into the east/north/up frame anchored at `origin`."""
    x = EARTH_RADIUS_M * math.radians(p.lon - origin.lon) * math.cos(math.radians(origin.lat))
    y = EARTH_RADIUS_M * math.radians(p.lat - origin.lat)
    return EnuPoint(x, y, p.alt - origin.alt)


def to_geo(e: EnuPoint, origin: GeoPoint) -> GeoPoint:
    """Inverse of :func:`to_enu` for the same origin."""
    lat = origin.lat + math.degrees(e.y / EARTH_RADIUS_M)
    lon = origin.lon + math.degrees(e.x / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat))))
    return GeoPoint(lat, lon, origin.alt + e.z)


def horizontal_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Ground distance; the east scale uses the mean latitude so a<->b is symmetric."""
    x = EARTH_RADIUS_M * math.radians(b.lon - a.lon) * math.cos(math.radians(0.5 * (a.lat + b.lat)))
    y = EARTH_RADIUS_M * math.radians(b.lat - a.lat)
    return math.hypot(x, y)


def distance_3d(a: GeoPoint, b: GeoPoint) -> float:
    e = to_enu(b, a)
    return math.sqrt(e.x * e.x + e.y * e.y + e.z * e.z)


def _cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def segment_intersection(s1: Segment, s2: Segment, eps: float = 1e-12) -> EnuPoint | None:
    """Intersection point of two closed 2D segments.

    Returns None for disjoint, parallel, and collinear-overlapping segments.
    The z coordinate of the result is 0.
    """
    px, py = s1.a.x, s1.a.y
    rx, ry = s1.b.x - px, s1.b.y - py
    qx, qy = s2.a.x, s2.a.y
    sx, sy = s2.b.x - qx, s2.b.y - qy

    denom = _cross(rx, ry, sx, sy)
    if abs(denom) <= eps * math.hypot(rx, ry) * math.hypot(sx, sy):
        return None
    wx, wy = qx - px, qy - py
    t = _cross(wx, wy, sx, sy) / denom
    u = _cross(wx, wy, rx, ry) / denom
    tol = 1e-12
    if -tol <= t <= 1.0 + tol and -tol <= u <= 1.0 + tol:
        t = min(max(t, 0.0), 1.0)
        return EnuPoint(px + t * rx, py + t * ry, 0.0)
    return None


def contains(r: GeoRect, p: GeoPoint, check_alt: bool = False) -> bool:
    inside = r.south <= p.lat <= r.north and r.west <= p.lon <= r.east
    if inside and check_alt:
        inside = r.alt_min <= p.alt <= r.alt_max
    return inside


def clamp_to_rect(p: GeoPoint, r: GeoRect) -> GeoPoint:
    """Per-axis clamp of lat, lon and altitude into the closed rectangle."""
    return GeoPoint(
        min(max(p.lat, r.south), r.north),
        min(max(p.lon, r.west), r.east),
        min(max(p.alt, r.alt_min), r.alt_max),
    )


def rect_quadrant(r: GeoRect, corner_index: int) -> GeoRect:
    """Quarter of `r` spanned by the named corner and the center of `r`.

    Corners are indexed SW=0, SE=1, NE=2, NW=3.
    """
    if corner_index not in (SW, SE, NE, NW):
        raise ValueError(f"corner index must be 0..3, got {corner_index}")
    mid_lat = (r.south + r.north) / 2.0
    mid_lon = (r.west + r.east) / 2.0
    south, north = (r.south, mid_lat) if corner_index in (SW, SE) else (mid_lat, r.north)
    west, east = (r.west, mid_lon) if corner_index in (SW, NW) else (mid_lon, r.east)
    return GeoRect(south, west, north, east, r.alt_min, r.alt_max)


def rect_intersection(a: GeoRect, b: GeoRect) -> GeoRect | None:
    """Overlap of two rectangles (altitude band taken from `a`)."""
    south, north = max(a.south, b.south), min(a.north, b.north)
    west, east = max(a.west, b.west), min(a.east, b.east)
    if south >= north or west >= east:
        return None
    return GeoRect(south, west, north, east, a.alt_min, a.alt_max)


def rect_from_enu(x0: float, y0: float, x1: float, y1: float, origin: GeoPoint,
                  alt_min: float = 0.0, alt_max: float = 1.0, decimals: int | None = 7) -> GeoRect:
    """Build a rectangle from ENU corner coordinates relative to `origin`.

    Corner latitudes/longitudes are rounded to `decimals` places so that the
    fence edges survive a round trip through a 9-significant-digit log.
    """
    sw = to_geo(EnuPoint(min(x0, x1), min(y0, y1)), origin)
    ne = to_geo(EnuPoint(max(x0, x1), max(y0, y1)), origin)
    vals = [sw.lat, sw.lon, ne.lat, ne.lon]
    if decimals is not None:
        vals = [round(v, decimals) for v in vals]
    return GeoRect(vals[0], vals[1], vals[2], vals[3], alt_min, alt_max)


def nearest_corner(r: GeoRect, p: GeoPoint) -> int:
    """Index of the corner of `r` horizontally closest to `p` (lowest index wins ties)."""
    dists = [horizontal_distance(c, p) for c in r.corners()]
    return min(range(4), key=lambda i: (dists[i], i))
