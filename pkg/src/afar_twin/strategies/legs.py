"""Fixed-heading leg searches: the organizer baseline and its annealed variant.

Both fly straight legs along the four cardinal headings and compare the signal
at the end of a leg with the signal at its start.  A drop turns the vehicle
90 degrees clockwise; anything else keeps the heading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..channel import Measurement
from ..geodesy import clamp_to_rect
from ..vehicle import VehicleState, WaypointCommand, at_waypoint
from .base import SearchContext, Strategy, StrategyDecision

HEADINGS = ("N", "E", "S", "W")
# unit ENU vectors for N, E, S, W
_DIRS = ((0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0))


def turn_cw(heading: int) -> int:
    return (heading + 1) % 4


def baseline_step(heading: int, avg_rssi_this_leg: float, avg_rssi_prev_leg: float) -> int:
    """Next heading: turn clockwise on a strict decrease, otherwise keep going."""
    if avg_rssi_this_leg < avg_rssi_prev_leg:
        return turn_cw(heading)
    return heading


@dataclass(frozen=True)
class GradientSearchState:
    interval_m: float = 40.0
    momentum_m: float = 0.0
    heading: int = 0
    # heading index -> ENU coordinate (x for E/W, y for N/S) past which the signal dropped
    bounds: dict = field(default_factory=dict)
    decay: float = 0.9
    momentum_step_m: float = 5.0
    interval_min_m: float = 5.0
    interval_max_m: float = 80.0
    boundary_margin_m: float = 10.0

    @property
    def leg_length_m(self) -> float:
        return min(max(self.interval_m + self.momentum_m, self.interval_min_m), self.interval_max_m)


def gradient_step(state: GradientSearchState, improved: bool, x: float, y: float) -> GradientSearchState:
    """Update interval, momentum, heading and soft boundaries after one leg.

    (x, y) is the ENU position at the end of the leg.  An improvement clears
    any soft boundary recorded for the current heading.
    """
    if improved:
        # a rise past a soft boundary shows the boundary was noise; forget it
        bounds = {h: b for h, b in state.bounds.items() if h != state.heading}
        return replace(state, momentum_m=state.momentum_m + state.momentum_step_m, bounds=bounds)
    bounds = dict(state.bounds)
    bounds[state.heading] = x if state.heading in (1, 3) else y
    return replace(
        state,
        heading=turn_cw(state.heading),
        interval_m=max(state.interval_m * state.decay, state.interval_min_m),
        momentum_m=0.0,
        bounds=bounds,
    )


def plan_leg(state: GradientSearchState, x: float, y: float) -> float:
    """Leg length from (x, y), shortened to stop short of a recorded boundary."""
    length = state.leg_length_m
    b = state.bounds.get(state.heading)
    if b is None:
        return length
    h, m = state.heading, state.boundary_margin_m
    if h == 0:
        room = (b - m) - y
    elif h == 1:
        room = (b - m) - x
    elif h == 2:
        room = y - (b + m)
    else:
        room = x - (b + m)
    if room < length:
        length = max(room, state.interval_min_m)
    return length


@dataclass(frozen=True)
class BaselineParams:
    leg_m: float = 40.0
    speed_mps: float = 10.0
    alt_m: float = 20.0
    # readings averaged per leg: None uses the whole leg, n the last n
    reading_window: int | None = None
    settle_samples: int = 5
    initial_heading: str = "N"


@dataclass(frozen=True)
class GradientParams:
    interval_m: float = 40.0
    interval_min_m: float = 5.0
    interval_max_m: float = 80.0
    decay: float = 0.9
    momentum_step_m: float = 5.0
    boundary_margin_m: float = 10.0
    speed_mps: float = 10.0
    alt_m: float = 20.0
    # readings averaged per leg: None uses the whole leg, n the last n
    reading_window: int | None = None
    settle_samples: int = 5
    initial_heading: str = "N"


class _LegSearch(Strategy):
    """Shared leg mechanics: settle at the start, then fly leg after leg."""

    def __init__(self, ctx: SearchContext, params=None):
        super().__init__(ctx, params)
        self.heading = HEADINGS.index(self.params.initial_heading)
        self.phase = "settle"
        self._samples: list[float] = []
        self._prev_reading: float | None = None
        self._best: float = -math.inf
        self._target = None

    # subclasses decide heading and leg length
    def _leg_length(self, x: float, y: float) -> float:
        raise NotImplementedError

    def _after_leg(self, reading: float, prev: float, x: float, y: float):
        raise NotImplementedError

    def _reading(self) -> tuple[float, float, float]:
        """Mean rssi of the leg and the centroid of where it was measured."""
        n = self.params.reading_window
        w = self._samples[-n:] if n else self._samples
        k = len(w)
        return (sum(r for r, _, _ in w) / k, sum(x for _, x, _ in w) / k, sum(y for _, _, y in w) / k)

    def _start_leg(self, vehicle: VehicleState) -> WaypointCommand:
        p = self.params
        here = self.ctx.enu(vehicle.pos)
        for _ in range(4):
            length = self._leg_length(here.x, here.y)
            dx, dy = _DIRS[self.heading]
            target = clamp_to_rect(self.ctx.geo(here.x + dx * length, here.y + dy * length, p.alt_m),
                                   self.ctx.uav_fence)
            t = self.ctx.enu(target)
            if math.hypot(t.x - here.x, t.y - here.y) >= 1.0:
                break
            # pinned against the fence: treat as a drop and turn
            self._after_leg(-math.inf, 0.0, here.x, here.y)
        self._samples = []
        self._target = target
        return WaypointCommand(target, p.speed_mps)

    def step(self, m: Measurement, vehicle: VehicleState) -> StrategyDecision:
        p = self.params
        if self._target is None:
            self._target = self.ctx.geo(*self._xy(vehicle), p.alt_m)
            return self.decision(WaypointCommand(self._target, p.speed_mps))

        self._samples.append((m.rssi_dbm, *self._xy(vehicle)))
        if self.phase == "settle":
            if at_waypoint(vehicle) and len(self._samples) >= p.settle_samples:
                reading = self._reading()
                self._prev_reading = reading[0]
                self._record_best(reading)
                self.phase = "legs"
                return self.decision(self._start_leg(vehicle))
            return self.decision()

        if not at_waypoint(vehicle):
            return self.decision()
        reading = self._reading()
        here = self.ctx.enu(vehicle.pos)
        self._after_leg(reading[0], self._prev_reading, here.x, here.y)
        self._prev_reading = reading[0]
        self._record_best(reading)
        return self.decision(self._start_leg(vehicle))

    def _xy(self, vehicle):
        e = self.ctx.enu(vehicle.pos)
        return e.x, e.y

    def _record_best(self, reading: tuple[float, float, float]):
        if reading[0] > self._best:
            self._best = reading[0]
            self.estimate = self.ctx.geo(reading[1], reading[2], 0.0)


class BaselineStrategy(_LegSearch):
    """Organizer sample code: fixed-length legs, turn clockwise on a drop."""

    name = "baseline"

    @classmethod
    def default_params(cls):
        return BaselineParams()

    def _leg_length(self, x, y):
        return self.params.leg_m

    def _after_leg(self, reading, prev, x, y):
        self.heading = baseline_step(self.heading, reading, prev)


class GradientStrategy(_LegSearch):
    """Leg search with interval annealing, momentum and per-heading soft boundaries."""

    name = "gradient"

    @classmethod
    def default_params(cls):
        return GradientParams()

    def __init__(self, ctx, params=None):
        super().__init__(ctx, params)
        p = self.params
        self.state = GradientSearchState(
            interval_m=p.interval_m, heading=self.heading, decay=p.decay,
            momentum_step_m=p.momentum_step_m, interval_min_m=p.interval_min_m,
            interval_max_m=p.interval_max_m, boundary_margin_m=p.boundary_margin_m,
        )

    def _leg_length(self, x, y):
        return plan_leg(self.state, x, y)

    def _after_leg(self, reading, prev, x, y):
        self.state = gradient_step(self.state, reading >= prev, x, y)
        self.heading = self.state.heading
