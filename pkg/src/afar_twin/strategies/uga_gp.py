"""Dual radio-map GP search gated by the quality-variance filter.

Readings are taken in non-overlapping windows; a window survives only if the
variance of its confidence values is small, and a surviving window becomes one
GP training point at the position of its middle reading.  Two grids share the
same GP posterior: one over the UAV fence picks where to fly (UCB), the other
over the rover fence holds the location estimate.

Phases: ``startup`` (hover until the gate first opens, then visit three far
corners), ``optimize`` (UCB waypoints), and ``circle`` (a ring of waypoints
around an estimate that has stopped moving, then back to ``optimize``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import Measurement
from ..geodesy import GeoPoint, GeoRect, horizontal_distance
from ..gp import GpModel, RadioMapGrid, acquire_ucb, estimate_peak, gp_fit
from ..sampling import QvFilter, qv_accept
from ..vehicle import VehicleState, WaypointCommand, at_waypoint
from .base import SearchContext, Strategy, StrategyDecision


@dataclass(frozen=True)
class UgaParams:
    speed_mps: float = 10.0
    alt_m: float = 20.0
    # fraction of the way each startup corner is pulled toward the fence center
    startup_shrink: float = 0.2
    circle_radius_m: float = 40.0
    circle_points: int = 8
    converge_m: float = 15.0
    converge_count: int = 3
    refit_period_s: float = 5.0
    refine_estimate: bool = True


@dataclass
class GpSeekState:
    guidance_grid: RadioMapGrid
    estimate_grid: RadioMapGrid
    qv: QvFilter
    phase: str = "startup"
    gp: GpModel | None = None
    recent_estimates: list = field(default_factory=list)


def startup_waypoints(fence: GeoRect, alt: float, shrink: float = 0.2) -> list[GeoPoint]:
    """SE, NE and NW fence corners pulled `shrink` of the way toward the center."""
    c = fence.center
    out = []
    for lat, lon in ((fence.south, fence.east), (fence.north, fence.east), (fence.north, fence.west)):
        out.append(GeoPoint(lat + shrink * (c.lat - lat), lon + shrink * (c.lon - lon), alt))
    return out


def circle_waypoints(ctx: SearchContext, center: GeoPoint, radius_m: float, n: int, alt: float) -> list[GeoPoint]:
    """`n` points on a circle around `center`, starting due east, counter-clockwise."""
    e = ctx.enu(center)
    pts = []
    for k in range(n):
        a = 2.0 * math.pi * k / n
        pts.append(ctx.geo(e.x + radius_m * math.cos(a), e.y + radius_m * math.sin(a), alt))
    return pts


def estimates_converged(estimates: list[GeoPoint], count: int, radius_m: float) -> bool:
    """True when the last `count` estimates are pairwise closer than `radius_m`."""
    if len(estimates) < count:
        return False
    last = estimates[-count:]
    return all(horizontal_distance(a, b) < radius_m
               for i, a in enumerate(last) for b in last[i + 1:])


class UgaGpStrategy(Strategy):
    name = "uga_gp"

    @classmethod
    def default_params(cls):
        return UgaParams()

    def __init__(self, ctx: SearchContext, params=None):
        super().__init__(ctx, params)
        s = ctx.sampling
        self.state = GpSeekState(
            guidance_grid=RadioMapGrid(ctx.uav_fence, ctx.origin, ctx.gp.nx, ctx.gp.ny),
            estimate_grid=RadioMapGrid(ctx.rover_fence, ctx.origin, ctx.gp.nx, ctx.gp.ny),
            qv=QvFilter(s.qv_window, s.qv_threshold, s.qv_escalation),
        )
        self.phase = self.state.phase
        self.kernel = ctx.gp.kernel
        self._window: list[Measurement] = []
        self._train_xy: list[tuple[float, float]] = []
        self._train_y: list[float] = []
        self._n_fitted = 0
        self._last_fit_t = -math.inf
        self._route: list[GeoPoint] = []
        self._started = False
        self._corners_planned = False

    def _cmd(self, target: GeoPoint) -> WaypointCommand:
        return WaypointCommand(target, self.params.speed_mps)

    def _gate(self, m: Measurement) -> bool | None:
        """Feed one reading to the current window; returns the gate verdict when it closes."""
        self._window.append(m)
        if len(self._window) < self.state.qv.window:
            return None
        ok, avg, self.state.qv = qv_accept(self.state.qv, self._window)
        if ok:
            mid = self.ctx.enu(self._window[len(self._window) // 2].rx_pos)
            self._train_xy.append((mid.x, mid.y))
            self._train_y.append(avg)
        self._window = []
        return ok

    def _refit(self, t: float):
        """Refit on new data and refresh both grids and the estimate."""
        if len(self._train_y) == self._n_fitted:
            return
        st = self.state
        st.gp = gp_fit(np.array(self._train_xy), np.array(self._train_y), self.kernel)
        self._n_fitted = len(self._train_y)
        self._last_fit_t = t
        st.guidance_grid.update(st.gp)
        st.estimate_grid.update(st.gp, with_var=False)
        self.estimate = estimate_peak(st.estimate_grid, st.gp, refine=self.params.refine_estimate)
        st.recent_estimates.append(self.estimate)

    def radio_map(self):
        st = self.state
        if st.gp is None:
            return None
        if np.isnan(st.estimate_grid.var[0]):
            st.estimate_grid.update(st.gp)
        return st.estimate_grid

    def _next_waypoint(self, m: Measurement) -> WaypointCommand | None:
        st, p = self.state, self.params
        if self._route:
            return self._cmd(self._route.pop(0))
        if st.phase == "circle":
            st.phase = "optimize"
            st.recent_estimates = []
        if m.t - self._last_fit_t < p.refit_period_s - 1e-9:
            return None
        self._refit(m.t)
        if st.gp is None:
            return None
        if estimates_converged(st.recent_estimates, p.converge_count, p.converge_m):
            st.phase = "circle"
            self._route = circle_waypoints(self.ctx, self.estimate, p.circle_radius_m,
                                           p.circle_points, p.alt_m)
            return self._cmd(self._route.pop(0))
        node = acquire_ucb(st.guidance_grid, self.ctx.gp.kappa)
        return self._cmd(GeoPoint(node.lat, node.lon, p.alt_m))

    def step(self, m: Measurement, vehicle: VehicleState) -> StrategyDecision:
        st, p = self.state, self.params
        cmd = None
        if not self._started:
            # hold over the start point at search altitude until the gate first opens
            self._started = True
            s = self.ctx.start_pos
            cmd = self._cmd(GeoPoint(s.lat, s.lon, p.alt_m))
        accepted = self._gate(m)

        if st.phase == "startup":
            if st.qv.accepted_any and not self._corners_planned:
                self._corners_planned = True
                self._route = startup_waypoints(self.ctx.uav_fence, p.alt_m, p.startup_shrink)
                cmd = self._cmd(self._route.pop(0))
            elif self._corners_planned and at_waypoint(vehicle):
                if self._route:
                    cmd = self._cmd(self._route.pop(0))
                else:
                    st.phase = "optimize"
                    cmd = self._next_waypoint(m)
        elif at_waypoint(vehicle):
            cmd = self._next_waypoint(m)

        self.phase = st.phase
        return StrategyDecision(cmd, self.estimate, accepted, self.phase)
