"""Strategy/harness contract shared by every search policy."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterable

from ..channel import Measurement
from ..geodesy import EnuPoint, GeoPoint, GeoRect, to_enu, to_geo
from ..gp import KernelParams
from ..vehicle import VehicleState, WaypointCommand


@dataclass(frozen=True)
class GpSettings:
    lengthscale_m: float = 60.0
    signal_var: float = 100.0
    noise_var: float = 25.0
    prior_mean_dbm: float = -80.0
    nx: int = 30
    ny: int = 30
    kappa: float = 2.0

    @property
    def kernel(self) -> KernelParams:
        return KernelParams(self.lengthscale_m, self.signal_var, self.noise_var, self.prior_mean_dbm)


@dataclass(frozen=True)
class SamplingSettings:
    buffer_capacity: int = 8
    buffer_period_s: float = 0.2
    qv_window: int = 5
    qv_threshold: float = 0.005
    qv_escalation: float = 2.0


@dataclass(frozen=True)
class SearchContext:
    """Everything a strategy may know about the arena before takeoff."""

    uav_fence: GeoRect
    rover_fence: GeoRect
    origin: GeoPoint
    start_pos: GeoPoint
    duration_s: float = 600.0
    fast_deadline_s: float = 180.0
    sample_period_s: float = 0.2
    gp: GpSettings = GpSettings()
    sampling: SamplingSettings = SamplingSettings()

    def enu(self, p: GeoPoint) -> EnuPoint:
        return to_enu(p, self.origin)

    def geo(self, x: float, y: float, alt: float) -> GeoPoint:
        g = to_geo(EnuPoint(x, y, 0.0), self.origin)
        return GeoPoint(g.lat, g.lon, alt)


@dataclass(frozen=True)
class StrategyDecision:
    command: WaypointCommand | None = None
    estimate: GeoPoint | None = None
    # None when the strategy has no accept/reject notion for this reading
    accepted: bool | None = None
    phase: str = ""


class Strategy:
    """Event-driven search policy: one measurement in, one decision out."""

    name = "abstract"

    def __init__(self, ctx: SearchContext, params=None):
        self.ctx = ctx
        self.params = params if params is not None else self.default_params()
        self.estimate: GeoPoint | None = None
        self.phase = ""

    @classmethod
    def default_params(cls):
        raise NotImplementedError

    def step(self, m: Measurement, vehicle: VehicleState) -> StrategyDecision:
        raise NotImplementedError

    def radio_map(self):
        """Latest estimate-area radio map, for strategies that build one."""
        return None

    def decision(self, command: WaypointCommand | None = None, accepted: bool | None = None) -> StrategyDecision:
        return StrategyDecision(command, self.estimate, accepted, self.phase)


def params_from_dict(cls, values: dict | None):
    """Build a params dataclass, rejecting unknown keys."""
    values = dict(values or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise KeyError(unknown[0])
    return cls(**values)


def snapshot_estimates(history: Iterable[tuple[float, GeoPoint | None]], start_pos: GeoPoint,
                       fast_deadline_s: float = 180.0, final_deadline_s: float = 600.0,
                       eps: float = 1e-9) -> tuple[GeoPoint, GeoPoint]:
    """Estimates held at the fast and final deadlines.

    `history` is a time-ordered sequence of ``(t, estimate)``; the snapshot at a
    deadline is the estimate of the last entry with ``t <= deadline``.  Missing
    estimates fall back to the start position.  Raises ValueError when the
    history ends before a deadline.
    """
    fast = final = None
    fast_seen = final_seen = False
    last_t = -math.inf
    for t, est in history:
        last_t = t
        if t <= fast_deadline_s + eps:
            fast, fast_seen = est, True
        if t <= final_deadline_s + eps:
            final, final_seen = est, True
    if not fast_seen or last_t < fast_deadline_s - eps:
        raise ValueError("incomplete fast snapshot: history ends before the fast deadline")
    if not final_seen or last_t < final_deadline_s - eps:
        raise ValueError("incomplete final snapshot: history ends before the final deadline")
    return (fast if fast is not None else start_pos, final if final is not None else start_pos)
