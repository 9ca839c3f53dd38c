import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afar_twin.geodesy import EnuPoint, GeoPoint, contains, distance_3d, rect_from_enu, to_geo
from afar_twin.vehicle import VehicleState, WaypointCommand, at_waypoint, command_vehicle, rover_state, set_waypoint, step

O = GeoPoint(35.7, -78.7, 0.0)
FENCE = rect_from_enu(0, 0, 300, 300, O, 20, 110)


def p(x, y, z=50.0):
    return to_geo(EnuPoint(x, y, z), O)


def test_set_waypoint_inside_unchanged():
    cmd = WaypointCommand(p(100, 100), 7.0)
    assert set_waypoint(VehicleState(p(0, 0)), cmd, FENCE) == cmd


def test_set_waypoint_clamps_east_and_altitude():
    cmd = set_waypoint(VehicleState(p(0, 0)), WaypointCommand(p(350, 100), 10.0), FENCE)
    assert cmd.target.lon == FENCE.east
    assert cmd.target.lat == pytest.approx(p(350, 100).lat)
    cmd = set_waypoint(VehicleState(p(0, 0)), WaypointCommand(p(50, 50, 5.0), 25.0), FENCE)
    assert cmd.target.alt == 20.0
    assert cmd.speed_mps == 10.0


def test_set_waypoint_rejects_bad_input():
    s = VehicleState(p(0, 0))
    with pytest.raises(ValueError):
        set_waypoint(s, WaypointCommand(GeoPoint(35.7, -78.7, math.nan), 5.0), FENCE)
    with pytest.raises(ValueError):
        set_waypoint(s, WaypointCommand(p(1, 1), 0.0), FENCE)


def test_step_moves_one_meter():
    s = command_vehicle(VehicleState(p(100, 100)), WaypointCommand(p(100, 200), 10.0), FENCE)
    s2 = step(s, 0.1, FENCE)
    assert distance_3d(s.pos, s2.pos) == pytest.approx(1.0, abs=1e-3)
    assert s2.tilt_deg == 5.0 and s2.speed_mps == 10.0
    assert s2.heading_deg == pytest.approx(0.0, abs=1e-6)


def test_step_snaps_and_holds():
    s = command_vehicle(VehicleState(p(100, 100)), WaypointCommand(p(100, 100.5), 10.0), FENCE)
    s2 = step(s, 0.1, FENCE)
    assert s2.pos == s.command.target
    assert s2.tilt_deg == 0.0 and s2.speed_mps == 0.0
    s3 = step(s2, 0.1, FENCE)
    assert s3.pos == s2.pos and s3.tilt_deg == 0.0


def test_half_speed_half_tilt():
    s = command_vehicle(VehicleState(p(100, 100)), WaypointCommand(p(200, 100), 5.0), FENCE)
    assert step(s, 0.1, FENCE).tilt_deg == 2.5


def test_travel_time():
    s = command_vehicle(VehicleState(p(10, 10)), WaypointCommand(p(10, 210), 10.0), FENCE)
    n = 0
    while not (s.command and s.pos == s.command.target):
        s = step(s, 0.1, FENCE)
        n += 1
    assert abs(n * 0.1 - 20.0) <= 0.1 + 1e-9


def test_at_waypoint_tolerance():
    tgt = p(100, 100)
    cmd = WaypointCommand(tgt, 5.0)
    assert at_waypoint(VehicleState(tgt, command=cmd), 2.0)
    assert not at_waypoint(VehicleState(p(100, 102.1), command=cmd), 2.0)
    assert at_waypoint(VehicleState(p(100, 101.9), command=cmd), 2.0)


def test_rover_never_moves():
    r = rover_state(p(50, 50, 0))
    assert step(r, 0.1, FENCE).pos == r.pos


xy = st.floats(-100, 400)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(xy, xy, st.floats(0, 200), st.floats(0.5, 30)), min_size=1, max_size=5))
def test_fence_and_speed_invariants(cmds):
    s = VehicleState(p(0, 0, 50))
    for x, y, z, v in cmds:
        s = command_vehicle(s, WaypointCommand(p(x, y, z), v), FENCE)
        for _ in range(40):
            s2 = step(s, 0.1, FENCE)
            assert contains(FENCE, s2.pos, check_alt=True)
            assert distance_3d(s.pos, s2.pos) <= 10 * 0.1 + 1e-9
            assert (s2.tilt_deg == 0.0) == (s2.speed_mps == 0.0)
            s = s2
