"""Default competition geometry.

The real fence and hiding-spot coordinates were never published, so this is a
synthetic layout with the same shape: a 300 m square UAV fence, an overlapping
290 m square rover fence, and three hiding spots of increasing difficulty.

All coordinates are ENU meters relative to the south-west corner of the UAV
fence at ground level.
"""

from __future__ import annotations

from .geodesy import GeoPoint, GeoRect, rect_from_enu, to_geo, EnuPoint

ORIGIN = GeoPoint(35.7275, -78.6960, 0.0)

UAV_FENCE_ENU = (0.0, 0.0, 300.0, 300.0)
ROVER_FENCE_ENU = (40.0, -10.0, 330.0, 280.0)
UAV_ALT_BAND = (20.0, 110.0)
START_ALT_M = 50.0

LOCATIONS_ENU = {
    # near the start corner
    "L1": (75.0, 60.0),
    # far side, close to the northern edge of the rover area
    "L2": (260.0, 268.0),
    # east of the UAV fence: the drone cannot fly over it
    "L3": (318.0, 150.0),
}


def uav_fence(origin: GeoPoint = ORIGIN) -> GeoRect:
    return rect_from_enu(*UAV_FENCE_ENU, origin, *UAV_ALT_BAND)


def rover_fence(origin: GeoPoint = ORIGIN) -> GeoRect:
    return rect_from_enu(*ROVER_FENCE_ENU, origin, 0.0, 1.0)


def start_position(fence: GeoRect | None = None) -> GeoPoint:
    fence = fence or uav_fence()
    return GeoPoint(fence.south, fence.west, START_ALT_M)


def _round_point(p: GeoPoint) -> GeoPoint:
    return GeoPoint(round(p.lat, 7), round(p.lon, 7), 0.0)


def locations(origin: GeoPoint = ORIGIN) -> dict[str, GeoPoint]:
    return {k: _round_point(to_geo(EnuPoint(x, y), origin)) for k, (x, y) in LOCATIONS_ENU.items()}
