"""Recursive perimeter sweep.

The vehicle flies the perimeter of the overlap between the UAV and rover
fences, averaging readings in 8-sample groups.  The strongest average on each
edge gives four points; the chord joining the north and south maxima crossed
with the chord joining the east and west maxima is the current guess.  The
search then recurses into the quadrant whose outer corner is closest to the
strongest reading of the flight so far, and the last intersection is the
answer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..channel import Measurement
from ..geodesy import (CORNER_NAMES, GeoPoint, GeoRect, Segment, nearest_corner, rect_intersection,
                       rect_quadrant, segment_intersection, to_enu, to_geo)
from ..sampling import SampleBuffer
from ..vehicle import VehicleState, WaypointCommand, at_waypoint
from .base import SearchContext, Strategy, StrategyDecision

# edge flown when leaving corner i counter-clockwise (SW->SE is the south edge, ...)
EDGE_FROM_CORNER = ("S", "E", "N", "W")


@dataclass(frozen=True)
class UntParams:
    speed_mps: float = 10.0
    alt_m: float = 20.0
    max_depth: int = 4


@dataclass
class RecursiveSweepState:
    rect: GeoRect
    depth: int = 0
    phase: str = "sweeping"
    # edge label -> (position, averaged dBm), for the current sweep only
    edge_maxima: dict = field(default_factory=dict)
    # strongest average of the whole flight, kept across sweeps
    best: tuple[GeoPoint, float] | None = None
    intersection: GeoPoint | None = None

    def record(self, edge: str, pos: GeoPoint, dbm: float):
        cur = self.edge_maxima.get(edge)
        if cur is None or dbm > cur[1]:
            self.edge_maxima[edge] = (pos, dbm)
        if self.best is None or dbm > self.best[1]:
            self.best = (pos, dbm)


def perimeter_route(entry_corner: int) -> list[tuple[int, str]]:
    """(corner to reach, edge flown to reach it) for a full counter-clockwise lap."""
    return [((entry_corner + k + 1) % 4, EDGE_FROM_CORNER[(entry_corner + k) % 4]) for k in range(4)]


def chord_intersection(edge_maxima: dict, origin: GeoPoint) -> GeoPoint | None:
    """Crossing of the N-S and E-W chords between per-edge maxima, if any."""
    try:
        n, s, e, w = (edge_maxima[k][0] for k in ("N", "S", "E", "W"))
    except KeyError:
        return None
    try:
        ns = Segment(to_enu(s, origin), to_enu(n, origin))
        ew = Segment(to_enu(w, origin), to_enu(e, origin))
    except ValueError:
        return None
    hit = segment_intersection(ns, ew)
    if hit is None:
        return None
    g = to_geo(hit, origin)
    return GeoPoint(g.lat, g.lon, 0.0)


def sweep_guess(state: RecursiveSweepState, origin: GeoPoint) -> GeoPoint | None:
    """Chord intersection, falling back to the strongest reading so far."""
    hit = chord_intersection(state.edge_maxima, origin)
    if hit is not None:
        return hit
    if state.best is not None:
        p = state.best[0]
        return GeoPoint(p.lat, p.lon, 0.0)
    return None


def next_rect(rect: GeoRect, max_pos: GeoPoint) -> GeoRect:
    """Quadrant of `rect` at the corner closest to the strongest reading."""
    return rect_quadrant(rect, nearest_corner(rect, max_pos))


def unt_recursive_step(state: RecursiveSweepState, origin: GeoPoint, max_depth: int) -> GeoPoint | None:
    """Close a finished sweep: set the intersection, then recurse or stop.

    Mutates `state` in place and returns the new estimate.
    """
    state.phase = "intersecting"
    guess = sweep_guess(state, origin)
    if guess is not None:
        state.intersection = guess
    if state.depth < max_depth and state.best is not None:
        state.rect = next_rect(state.rect, state.best[0])
        state.depth += 1
        state.phase = "descending"
    else:
        state.phase = "done"
    state.edge_maxima = {}
    return state.intersection


class UntRecursiveStrategy(Strategy):
    name = "unt_recursive"

    @classmethod
    def default_params(cls):
        return UntParams()

    def __init__(self, ctx: SearchContext, params=None):
        super().__init__(ctx, params)
        rect = rect_intersection(ctx.uav_fence, ctx.rover_fence) or ctx.uav_fence
        self.state = RecursiveSweepState(rect=rect)
        self.buffer = SampleBuffer(ctx.sampling.buffer_capacity, ctx.sampling.buffer_period_s)
        self._labels: list[str] = []
        self._route: list[tuple[int, str]] = []
        self._leg = -1  # -1 while approaching the entry corner
        self._target: GeoPoint | None = None
        self.phase = "sweeping"
        self.history: list[tuple[GeoRect, GeoPoint | None]] = []

    def _goto(self, corner: int) -> WaypointCommand:
        self._target = self.state.rect.corner(corner, self.params.alt_m)
        return WaypointCommand(self._target, self.params.speed_mps)

    def _begin_rect(self, vehicle: VehicleState) -> WaypointCommand:
        entry = nearest_corner(self.state.rect, vehicle.pos)
        self._route = perimeter_route(entry)
        self._leg = -1
        self.buffer.clear()
        self._labels = []
        return self._goto(entry)

    def step(self, m: Measurement, vehicle: VehicleState) -> StrategyDecision:
        st = self.state
        if self._target is None:
            return self._emit(self._begin_rect(vehicle))
        if st.phase == "done":
            return self._emit()

        if self._leg >= 0:
            self._labels.append(self._route[self._leg][1])
            out = self.buffer.push(m)
            if out is not None:
                label = self._labels[self.buffer.center_index]
                self._labels = []
                st.record(label, out[1], out[0])
                if st.intersection is None:
                    p = st.best[0]
                    self.estimate = GeoPoint(p.lat, p.lon, 0.0)

        if not at_waypoint(vehicle, 0.5):
            return self._emit()

        if self._leg < 3:
            if st.phase == "descending":
                st.phase = "sweeping"
            self._leg += 1
            return self._emit(self._goto(self._route[self._leg][0]))

        # lap complete
        self.buffer.clear()
        self._labels = []
        rect_before = st.rect
        self.estimate = unt_recursive_step(st, self.ctx.origin, self.params.max_depth)
        self.history.append((rect_before, self.estimate))
        if st.phase == "done":
            return self._emit()
        return self._emit(self._begin_rect(vehicle))

    def _emit(self, cmd: WaypointCommand | None = None) -> StrategyDecision:
        self.phase = self.state.phase
        return StrategyDecision(cmd, self.estimate, None, self.phase)


__all__ = ["UntRecursiveStrategy", "UntParams", "RecursiveSweepState", "perimeter_route",
           "chord_intersection", "sweep_guess", "next_rect", "unt_recursive_step", "CORNER_NAMES"]
