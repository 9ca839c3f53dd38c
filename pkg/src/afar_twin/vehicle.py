"""First-order UAV kinematics with waypoint tracking and geofence clamping.

Heading changes are instantaneous and there is no acceleration limit; the
vehicle flies straight at the commanded speed until it is within one step of
its target, then snaps onto it and holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geodesy import GeoPoint, GeoRect, EnuPoint, clamp_to_rect, to_enu, to_geo

MAX_SPEED_MPS = 10.0
MAX_TILT_DEG = 5.0


@dataclass(frozen=True)
class WaypointCommand:
    target: GeoPoint
    speed_mps: float = MAX_SPEED_MPS


@dataclass(frozen=True)
class VehicleState:
    pos: GeoPoint
    heading_deg: float = 0.0
    speed_mps: float = 0.0
    tilt_deg: float = 0.0
    t: float = 0.0
    command: WaypointCommand | None = None


def rover_state(pos: GeoPoint) -> VehicleState:
    """The rover: a vehicle that never moves."""
    return VehicleState(pos=pos)


def set_waypoint(state: VehicleState, cmd: WaypointCommand, fence: GeoRect) -> WaypointCommand:
    """Clamp a requested waypoint into the fence and the speed to at most 10 m/s.

    Raises ValueError for non-finite targets and non-positive speeds.
    """
    tgt = cmd.target
    if not all(math.isfinite(v) for v in (tgt.lat, tgt.lon, tgt.alt, cmd.speed_mps)):
        raise ValueError(f"non-finite waypoint command {cmd}")
    if cmd.speed_mps <= 0.0:
        raise ValueError(f"waypoint speed must be positive, got {cmd.speed_mps}")
    return WaypointCommand(clamp_to_rect(tgt, fence), min(cmd.speed_mps, MAX_SPEED_MPS))


def command_vehicle(state: VehicleState, cmd: WaypointCommand, fence: GeoRect) -> VehicleState:
    return replace(state, command=set_waypoint(state, cmd, fence))


def step(state: VehicleState, dt: float, fence: GeoRect) -> VehicleState:
    """Advance the vehicle by `dt` seconds toward its active target."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    t = state.t + dt
    cmd = state.command
    if cmd is None:
        return replace(state, speed_mps=0.0, tilt_deg=0.0, t=t)

    d = to_enu(cmd.target, state.pos)
    dist = math.sqrt(d.x * d.x + d.y * d.y + d.z * d.z)
    speed = cmd.speed_mps
    travel = speed * dt
    if dist <= travel:
        return replace(state, pos=cmd.target, speed_mps=0.0, tilt_deg=0.0, t=t)

    f = travel / dist
    new_pos = clamp_to_rect(to_geo(EnuPoint(d.x * f, d.y * f, d.z * f), state.pos), fence)
    heading = state.heading_deg
    if d.x != 0.0 or d.y != 0.0:
        heading = math.degrees(math.atan2(d.x, d.y)) % 360.0
    tilt = MAX_TILT_DEG * speed / MAX_SPEED_MPS
    return VehicleState(new_pos, heading, speed, tilt, t, cmd)


def at_waypoint(state: VehicleState, tol_m: float = 2.0) -> bool:
    """True when the vehicle is within `tol_m` (3D) of its active target, or has none."""
    if state.command is None:
        return True
    d = to_enu(state.command.target, state.pos)
    return math.sqrt(d.x * d.x + d.y * d.y + d.z * d.z) <= tol_m
