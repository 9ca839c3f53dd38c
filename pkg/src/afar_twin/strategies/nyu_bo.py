"""Edge traverse followed by Bayesian optimization over a GP radio map.

Phases, always in this order:

``edge_traverse``
    Fly the south edge west->east and back, then the west edge south->north.
    The fast estimate pairs the longitude of the strongest (binned, smoothed)
    south-edge reading with the latitude of the strongest west-edge reading.
``optimize``
    Fit a GP on every reading so far, fly to the acquisition maximum over the
    UAV fence, dwell, repeat.  The estimate is the posterior-mean maximum over
    the rover fence.
``boundary_probe``
    Entered when the estimate keeps sitting on a UAV-fence edge beyond which
    the rover may hide.  The vehicle shuttles along a leg perpendicular to that
    edge; a straight line fitted to rssi against inward distance gives a slope,
    and the distance beyond the edge whose free-space profile has that slope
    places the estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..channel import Measurement
from ..geodesy import GeoPoint
from ..gp import GpModel, RadioMapGrid, acquire_ei, acquire_ucb, estimate_peak, gp_fit
from ..vehicle import VehicleState, WaypointCommand, at_waypoint
from .base import SearchContext, Strategy, StrategyDecision

PHASES = ("edge_traverse", "optimize", "boundary_probe")


@dataclass(frozen=True)
class NyuBoParams:
    speed_mps: float = 10.0
    alt_m: float = 20.0
    edge_deadline_s: float = 150.0
    edge_bin_m: float = 20.0
    # readings averaged into one GP training point (2 s at the default rate)
    group_n: int = 10
    acquisition: str = "ei"
    ei_xi: float = 0.01
    dwell_s: float = 2.0
    refine_estimate: bool = True
    # kernel lengthscale override for this strategy; None keeps the shared GP setting
    lengthscale_m: float | None = None
    boundary_tol_m: float = 5.0
    boundary_hold: int = 3
    probe_min_t_s: float = 200.0
    probe_leg_m: float = 60.0
    probe_speed_mps: float = 2.0
    # half length of the leg flown along the boundary
    probe_sweep_m: float = 40.0
    probe_refit_s: float = 10.0
    # path-loss exponent assumed when turning the fitted slope into a distance
    pl_exponent: float = 2.0


def fit_line(x, y) -> tuple[float, float]:
    """Least-squares line ``y = intercept + slope * x``; returns (slope, intercept)."""
    slope, intercept = np.polyfit(np.asarray(x, dtype=float), np.asarray(y, dtype=float), 1)
    return float(slope), float(intercept)


def fit_offset(inward_m, along_m, alt_m, rssi_dbm, max_offset_m: float, half_width_m: float,
               exponent: float = 2.0, step_m: float = 2.0) -> tuple[float, float]:
    """Transmitter placement beyond a boundary that best explains the readings.

    Readings sit `inward_m` inside the boundary and `along_m` along it.  The
    candidate transmitter is `offset` beyond the boundary and `shift` along it;
    each candidate is scored by the residual of ``rssi = a - 10 n log10(d)``
    with the intercept ``a`` solved in closed form, so only the shape of the
    profile matters.  Coarse grid, then a fine grid around the winner.
    Returns (offset, shift).
    """
    s = np.asarray(inward_m, dtype=float)
    a = np.asarray(along_m, dtype=float)
    h2 = np.asarray(alt_m, dtype=float) ** 2
    y = np.asarray(rssi_dbm, dtype=float)
    hi_d = max(max_offset_m, 0.0)

    def search(ds, cs):
        dd, cc = np.meshgrid(ds, cs, indexing="ij")
        dd, cc = dd.ravel()[:, None], cc.ravel()[:, None]
        r2 = (s[None, :] + dd) ** 2 + (a[None, :] - cc) ** 2 + h2[None, :]
        resid = y[None, :] + 5.0 * exponent * np.log10(np.maximum(r2, 1.0))
        sse = np.var(resid, axis=1)
        k = int(np.argmin(sse))
        return float(dd[k, 0]), float(cc[k, 0])

    d0, c0 = search(np.arange(0.0, hi_d + step_m, step_m).clip(max=hi_d),
                    np.arange(-half_width_m, half_width_m + step_m, step_m).clip(-half_width_m, half_width_m))
    fine = np.linspace(-step_m, step_m, 17)
    return search(np.clip(d0 + fine, 0.0, hi_d), np.clip(c0 + fine, -half_width_m, half_width_m))


@dataclass
class BoSearchState:
    phase: str = "edge_traverse"
    gp: GpModel | None = None
    # (lat of the west-edge maximum, lon of the south-edge maximum)
    edge_best: tuple[float, float] | None = None
    # (slope dB/m, intercept dBm) of rssi against inward distance on the probe legs
    boundary_fit: tuple[float, float] | None = None

    def advance(self, phase: str):
        if PHASES.index(phase) < PHASES.index(self.phase):
            raise ValueError(f"phase cannot go back from {self.phase} to {phase}")
        self.phase = phase


def edge_peak(coords, values, bin_m: float) -> float:
    """Coordinate of the strongest reading after binning and 3-bin smoothing."""
    c = np.asarray(coords, dtype=float)
    v = np.asarray(values, dtype=float)
    lo = c.min()
    idx = np.floor((c - lo) / bin_m).astype(int)
    nb = idx.max() + 1
    sums = np.bincount(idx, weights=v, minlength=nb)
    counts = np.bincount(idx, minlength=nb)
    centers = lo + (np.arange(nb) + 0.5) * bin_m
    ok = counts > 0
    means = np.full(nb, np.nan)
    means[ok] = sums[ok] / counts[ok]
    padded = np.concatenate([[np.nan], means, [np.nan]])
    window = np.vstack([padded[:-2], padded[1:-1], padded[2:]])
    smooth = np.nanmean(np.where(np.isnan(window), np.nan, window), axis=0)
    smooth[~ok] = -np.inf
    return float(centers[int(np.argmax(smooth))])


class NyuBoStrategy(Strategy):
    name = "nyu_bo"

    @classmethod
    def default_params(cls):
        return NyuBoParams()

    def __init__(self, ctx: SearchContext, params=None):
        super().__init__(ctx, params)
        p = self.params
        if p.acquisition not in ("ucb", "ei"):
            raise ValueError(f"acquisition must be 'ucb' or 'ei', got {p.acquisition!r}")
        self.state = BoSearchState()
        self.phase = self.state.phase
        self.kernel = ctx.gp.kernel
        if p.lengthscale_m is not None:
            self.kernel = replace(self.kernel, lengthscale_m=p.lengthscale_m)
        self.guide_grid = RadioMapGrid(ctx.uav_fence, ctx.origin, ctx.gp.nx, ctx.gp.ny)
        self.est_grid = RadioMapGrid(ctx.rover_fence, ctx.origin, ctx.gp.nx, ctx.gp.ny)

        u = ctx.uav_fence
        self._fence_xy = (ctx.enu(GeoPoint(u.south, u.west)), ctx.enu(GeoPoint(u.north, u.east)))
        r = ctx.rover_fence
        self._rover_xy = (ctx.enu(GeoPoint(r.south, r.west)), ctx.enu(GeoPoint(r.north, r.east)))

        # raw readings grouped into GP training points
        self._group: list[tuple[float, float, float]] = []
        self._train_xy: list[tuple[float, float]] = []
        self._train_y: list[float] = []
        self._n_fitted = 0
        # edge traverse bookkeeping
        self._route: list[tuple[GeoPoint, str | None]] = []
        self._edge_samples = {"S": ([], []), "W": ([], [])}
        self._current_edge: str | None = None
        self._target: GeoPoint | None = None
        self._arrived_t: float | None = None
        self._boundary_streak = 0
        self._boundary_edge: str | None = None
        # boundary probe bookkeeping
        self._probe = None

    # ----------------------------------------------------------------- helpers
    def _cmd(self, target: GeoPoint, speed: float | None = None) -> WaypointCommand:
        self._target = target
        self._arrived_t = None
        return WaypointCommand(target, speed or self.params.speed_mps)

    def _xy(self, p: GeoPoint) -> tuple[float, float]:
        e = self.ctx.enu(p)
        return e.x, e.y

    def _add_sample(self, m: Measurement):
        x, y = self._xy(m.rx_pos)
        self._group.append((x, y, m.rssi_dbm))
        if len(self._group) >= self.params.group_n:
            g = np.array(self._group)
            self._train_xy.append((float(g[:, 0].mean()), float(g[:, 1].mean())))
            self._train_y.append(float(g[:, 2].mean()))
            self._group = []

    def _refit(self) -> bool:
        if not self._train_y or len(self._train_y) == self._n_fitted:
            return False
        self.state.gp = gp_fit(np.array(self._train_xy), np.array(self._train_y), self.kernel)
        self._n_fitted = len(self._train_y)
        self.est_grid.update(self.state.gp, with_var=False)
        if self.state.phase == "optimize":
            self.guide_grid.update(self.state.gp)
        return True

    def radio_map(self):
        if self.state.gp is None:
            return None
        if np.isnan(self.est_grid.var[0]):
            self.est_grid.update(self.state.gp)
        return self.est_grid

    # ------------------------------------------------------------ edge phase
    def _plan_edges(self):
        f = self.ctx.uav_fence
        a = self.params.alt_m
        sw, se, nw = GeoPoint(f.south, f.west, a), GeoPoint(f.south, f.east, a), GeoPoint(f.north, f.west, a)
        self._route = [(sw, None), (se, "S"), (sw, "S"), (nw, "W")]

    def _edge_estimate(self):
        (sx, sv), (wy, wv) = self._edge_samples["S"], self._edge_samples["W"]
        if not sx or not wy:
            return
        x = edge_peak(sx, sv, self.params.edge_bin_m)
        y = edge_peak(wy, wv, self.params.edge_bin_m)
        g = self.ctx.geo(x, y, 0.0)
        self.state.edge_best = (g.lat, g.lon)
        self.estimate = g

    def _step_edges(self, m: Measurement, vehicle: VehicleState):
        if self._current_edge is not None:
            x, y = self._xy(m.rx_pos)
            coords, vals = self._edge_samples[self._current_edge]
            coords.append(x if self._current_edge == "S" else y)
            vals.append(m.rssi_dbm)
        if m.t > self.params.edge_deadline_s:
            self._route = []
        elif not at_waypoint(vehicle, 0.5):
            return None
        if self._route:
            target, edge = self._route.pop(0)
            self._current_edge = edge
            return self._cmd(target)
        self._current_edge = None
        self._edge_estimate()
        self.state.advance("optimize")
        return self._next_bo_waypoint(m.t)

    # ------------------------------------------------------------ optimize phase
    def _next_bo_waypoint(self, t: float) -> WaypointCommand | None:
        if not self._refit() and self.state.gp is None:
            return None
        if not self.guide_grid.populated or np.isnan(self.guide_grid.var[0]):
            self.guide_grid.update(self.state.gp)
        self._update_estimate(t)
        if self.params.acquisition == "ucb":
            node = acquire_ucb(self.guide_grid, self.ctx.gp.kappa)
        else:
            node = acquire_ei(self.guide_grid, max(self._train_y), self.params.ei_xi)
        return self._cmd(GeoPoint(node.lat, node.lon, self.params.alt_m))

    def _update_estimate(self, t: float):
        est = estimate_peak(self.est_grid, self.state.gp, refine=self.params.refine_estimate)
        # the edge-based guess stands as the fast answer; the map takes over afterwards
        if self.state.edge_best is None or t > self.ctx.fast_deadline_s:
            self.estimate = est
        edge = self._edge_on_boundary(est)
        if edge is not None and edge == self._boundary_edge:
            self._boundary_streak += 1
        else:
            self._boundary_streak = 1 if edge is not None else 0
        self._boundary_edge = edge

    def _shared_edges(self) -> list[str]:
        (fx0, fy0), (fx1, fy1) = ((p.x, p.y) for p in self._fence_xy)
        (rx0, ry0), (rx1, ry1) = ((p.x, p.y) for p in self._rover_xy)
        edges = []
        if ry0 < fy0 - 1e-6:
            edges.append("S")
        if rx1 > fx1 + 1e-6:
            edges.append("E")
        if ry1 > fy1 + 1e-6:
            edges.append("N")
        if rx0 < fx0 - 1e-6:
            edges.append("W")
        return edges

    def _edge_on_boundary(self, est: GeoPoint) -> str | None:
        """UAV-fence edge (with rover area beyond it) that the estimate sits on or past."""
        x, y = self._xy(est)
        (fx0, fy0), (fx1, fy1) = ((p.x, p.y) for p in self._fence_xy)
        tol = self.params.boundary_tol_m
        gaps = {"S": y - fy0, "E": fx1 - x, "N": fy1 - y, "W": x - fx0}
        cands = [(gaps[e], e) for e in self._shared_edges() if gaps[e] <= tol]
        if not cands:
            return None
        return min(cands)[1]

    def _step_optimize(self, m: Measurement, vehicle: VehicleState):
        if not at_waypoint(vehicle):
            return None
        if self._arrived_t is None:
            self._arrived_t = m.t
        if m.t - self._arrived_t < self.params.dwell_s - 1e-9:
            return None
        cmd = self._next_bo_waypoint(m.t)
        if (self._boundary_streak >= self.params.boundary_hold
                and m.t >= self.params.probe_min_t_s):
            self.state.advance("boundary_probe")
            return self._start_probe(vehicle)
        return cmd

    # ------------------------------------------------------------ boundary probe
    def _edge_frame(self, edge: str):
        """(point on edge line, outward normal, tangent) in ENU for a fence edge."""
        (fx0, fy0), (fx1, fy1) = ((p.x, p.y) for p in self._fence_xy)
        return {
            "S": ((0.0, fy0), (0.0, -1.0), (1.0, 0.0)),
            "E": ((fx1, 0.0), (1.0, 0.0), (0.0, 1.0)),
            "N": ((0.0, fy1), (0.0, 1.0), (1.0, 0.0)),
            "W": ((fx0, 0.0), (-1.0, 0.0), (0.0, 1.0)),
        }[edge]

    def _start_probe(self, vehicle: VehicleState) -> WaypointCommand:
        p = self.params
        edge = self._boundary_edge
        (ex, ey), (nx, ny), (tx, ty) = self._edge_frame(edge)
        x, y = self._xy(self.estimate)
        bx, by = (x, ey) if edge in ("S", "N") else (ex, y)
        (fx0, fy0), (fx1, fy1) = ((q.x, q.y) for q in self._fence_xy)
        bx, by = min(max(bx, fx0), fx1), min(max(by, fy0), fy1)
        (rx0, ry0), (rx1, ry1) = ((q.x, q.y) for q in self._rover_xy)
        far = {"S": by - ry0, "E": rx1 - bx, "N": ry1 - by, "W": bx - rx0}[edge]
        w = p.probe_sweep_m
        # a T: in along the normal and back, then left and right along the edge
        pattern = [(bx - nx * p.probe_leg_m, by - ny * p.probe_leg_m), (bx, by),
                   (bx - tx * w, by - ty * w), (bx + tx * w, by + ty * w), (bx, by)]
        self._probe = {
            "base": (bx, by), "normal": (nx, ny), "tangent": (tx, ty), "far_m": far,
            "pattern": pattern, "leg": -1, "samples": [], "last_fit_t": -math.inf,
            "recording": False,
        }
        return self._cmd(self.ctx.geo(bx, by, p.alt_m))

    def _probe_next(self) -> WaypointCommand:
        pr = self._probe
        pr["leg"] += 1
        pr["recording"] = True
        x, y = pr["pattern"][pr["leg"] % len(pr["pattern"])]
        return self._cmd(self.ctx.geo(x, y, self.params.alt_m), self.params.probe_speed_mps)

    def _probe_fit(self):
        pr = self._probe
        s = np.array(pr["samples"])
        bx, by = pr["base"]
        nx, ny = pr["normal"]
        tx, ty = pr["tangent"]
        dx, dy = s[:, 0] - bx, s[:, 1] - by
        inward = -(dx * nx + dy * ny)
        along = dx * tx + dy * ty
        perp = np.abs(along) < 1.0
        if perp.sum() >= 10 and np.ptp(inward[perp]) > 0:
            self.state.boundary_fit = fit_line(inward[perp], s[perp, 3])
        offset, shift = fit_offset(inward, along, s[:, 2], s[:, 3], pr["far_m"],
                                   self.params.probe_sweep_m, self.params.pl_exponent)
        pr["offset_m"], pr["shift_m"] = offset, shift
        (rx0, ry0), (rx1, ry1) = ((q.x, q.y) for q in self._rover_xy)
        ex = min(max(bx + nx * offset + tx * shift, rx0), rx1)
        ey = min(max(by + ny * offset + ty * shift, ry0), ry1)
        self.estimate = self.ctx.geo(ex, ey, 0.0)

    def _step_probe(self, m: Measurement, vehicle: VehicleState):
        pr = self._probe
        if pr["recording"]:
            x, y = self._xy(m.rx_pos)
            pr["samples"].append((x, y, m.rx_pos.alt, m.rssi_dbm))
            if pr["leg"] >= 4 and m.t - pr["last_fit_t"] >= self.params.probe_refit_s:
                pr["last_fit_t"] = m.t
                self._probe_fit()
        if at_waypoint(vehicle, 0.5):
            return self._probe_next()
        return None

    # ----------------------------------------------------------------- driver
    def step(self, m: Measurement, vehicle: VehicleState) -> StrategyDecision:
        self._add_sample(m)
        if self._target is None:
            self._plan_edges()
        phase = self.state.phase
        if phase == "edge_traverse":
            cmd = self._step_edges(m, vehicle)
        elif phase == "optimize":
            cmd = self._step_optimize(m, vehicle)
        else:
            cmd = self._step_probe(m, vehicle)
        self.phase = self.state.phase
        return StrategyDecision(cmd, self.estimate, None, self.phase)
