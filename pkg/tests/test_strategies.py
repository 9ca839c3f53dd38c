import math
from dataclasses import replace

import numpy as np
import pytest

from afar_twin import scenario
from afar_twin.channel import channel_profile, mean_rssi_dbm
from afar_twin.geodesy import (NW, EnuPoint, GeoPoint, contains, horizontal_distance, rect_from_enu,
                               rect_intersection, to_enu, to_geo)
from afar_twin.harness import EpisodeConfig, run_episode
from afar_twin.strategies import STRATEGIES, make_strategy, snapshot_estimates
from afar_twin.strategies.legs import GradientSearchState, baseline_step, gradient_step, plan_leg
from afar_twin.strategies.nyu_bo import BoSearchState, edge_peak, fit_line, fit_offset
from afar_twin.strategies.uga_gp import circle_waypoints, estimates_converged, startup_waypoints
from afar_twin.strategies.unt_recursive import (RecursiveSweepState, chord_intersection, next_rect,
                                                perimeter_route, unt_recursive_step)
from afar_twin.vehicle import VehicleState

from conftest import meas

O = scenario.ORIGIN
N, E, S, W = range(4)


def enu(p):
    e = to_enu(p, O)
    return e.x, e.y


# baseline

def test_baseline_turn_rule():
    assert baseline_step(N, -60, -62) == N
    assert baseline_step(N, -60, -60) == N
    seq = [N]
    for _ in range(4):
        seq.append(baseline_step(seq[-1], -70, -60))
    assert seq == [N, E, S, W, N]


# gradient

def test_gradient_momentum_lengths():
    s = GradientSearchState(interval_m=40.0)
    lengths = []
    for _ in range(3):
        lengths.append(s.leg_length_m)
        s = gradient_step(s, True, 0.0, 0.0)
    assert lengths == [40.0, 45.0, 50.0]


def test_gradient_decrease():
    s = gradient_step(GradientSearchState(interval_m=40.0, momentum_m=10.0, heading=E), False, 150.0, 80.0)
    assert s.interval_m == pytest.approx(36.0)
    assert s.momentum_m == 0.0 and s.heading == S and s.bounds == {E: 150.0}


def test_gradient_interval_limits():
    s = GradientSearchState(interval_m=5.2)
    s = gradient_step(s, False, 0, 0)
    assert s.interval_m == 5.0
    s = replace(GradientSearchState(interval_m=78.0), momentum_m=20.0)
    assert s.leg_length_m == 80.0


def test_gradient_stop_short_of_boundary():
    s = GradientSearchState(interval_m=80.0, heading=E, bounds={E: 200.0})
    assert 150.0 + plan_leg(s, 150.0, 0.0) == pytest.approx(190.0)
    s = GradientSearchState(interval_m=80.0, heading=W, bounds={W: 20.0})
    assert plan_leg(s, 100.0, 0.0) == pytest.approx(70.0)
    assert plan_leg(replace(s, heading=N), 100.0, 0.0) == 80.0


def test_gradient_improvement_clears_bound():
    s = GradientSearchState(heading=E, bounds={E: 200.0, N: 50.0})
    assert gradient_step(s, True, 0, 0).bounds == {N: 50.0}


# UNT

def square(x0, y0, x1, y1):
    return rect_from_enu(x0, y0, x1, y1, O, 20, 110, decimals=None)


def test_quadrant_recursion_example():
    r = square(0, 0, 300, 300)
    q = next_rect(r, to_geo(EnuPoint(40, 260), O))
    assert enu(GeoPoint(q.south, q.west)) == pytest.approx((0, 150), abs=1e-6)
    assert enu(GeoPoint(q.north, q.east)) == pytest.approx((150, 300), abs=1e-6)


def test_perimeter_route_counter_clockwise():
    assert perimeter_route(0) == [(1, "S"), (2, "E"), (3, "N"), (0, "W")]
    assert perimeter_route(NW)[0] == (0, "W")


def test_chords_cross_at_center_in_clean_channel():
    r = rect_intersection(scenario.uav_fence(), scenario.rover_fence())
    c = r.center
    rover = GeoPoint(c.lat, c.lon, 0.0)
    p = channel_profile("clean")
    corners = [to_enu(k, O) for k in r.corners()]
    maxima = {}
    for edge, (a, b) in zip("SENW", zip(corners, corners[1:] + corners[:1])):
        best = None
        for t in np.linspace(0, 1, 301):
            pos = to_geo(EnuPoint(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), 20.0), O)
            v = mean_rssi_dbm(rover, pos, 0.0, p)
            if best is None or v > best[1]:
                best = (pos, v)
        maxima[edge] = best
    hit = chord_intersection(maxima, O)
    assert horizontal_distance(hit, rover) <= 10.0


def test_parallel_chords_fall_back_to_best():
    r = square(0, 0, 300, 300)
    st = RecursiveSweepState(r)
    same = to_geo(EnuPoint(100, 0, 20), O)
    for edge in "NSEW":
        st.record(edge, same, -70.0)
    st.record("E", to_geo(EnuPoint(300, 100, 20), O), -50.0)
    est = unt_recursive_step(st, O, 4)
    assert horizontal_distance(est, to_geo(EnuPoint(300, 100), O)) < 1e-6


def test_recursion_nests_and_halves():
    st = RecursiveSweepState(square(0, 0, 300, 300))
    prev = st.rect
    hot = to_geo(EnuPoint(210, 80, 20), O)
    for depth in range(1, 5):
        st.record("S", hot, -40.0)
        unt_recursive_step(st, O, 4)
        assert st.depth == depth
        assert contains(prev, GeoPoint(st.rect.south, st.rect.west)) and contains(prev, GeoPoint(st.rect.north, st.rect.east))
        assert st.rect.north - st.rect.south == pytest.approx((prev.north - prev.south) / 2)
        assert st.rect.east - st.rect.west == pytest.approx((prev.east - prev.west) / 2)
        prev = st.rect
    unt_recursive_step(st, O, 4)
    assert st.phase == "done" and st.depth == 4


# UGA

def test_startup_corners_shrunk():
    f = square(0, 0, 300, 300)
    pts = [enu(p) for p in startup_waypoints(f, 20.0, 0.2)]
    assert pts == [pytest.approx(v, abs=1e-6) for v in ((270, 30), (270, 270), (30, 270))]


def test_circle_waypoints():
    ctx = make_strategy("uga_gp", scenario_ctx()).ctx
    c = to_geo(EnuPoint(150, 150), O)
    pts = circle_waypoints(ctx, c, 40.0, 8, 20.0)
    assert len(pts) == 8
    for p in pts:
        x, y = enu(p)
        assert math.hypot(x - 150, y - 150) == pytest.approx(40.0, abs=1e-6)
        assert p.alt == 20.0
    assert enu(pts[0]) == pytest.approx((190, 150), abs=1e-6)


def test_convergence_rule():
    a = to_geo(EnuPoint(100, 100), O)
    close = [a, to_geo(EnuPoint(105, 100), O), to_geo(EnuPoint(100, 108), O)]
    assert estimates_converged(close, 3, 15.0)
    assert not estimates_converged(close[:2], 3, 15.0)
    assert not estimates_converged(close + [to_geo(EnuPoint(130, 100), O)], 3, 15.0)


def scenario_ctx():
    return EpisodeConfig(rover_pos=scenario.locations()["L1"]).context()


def test_uga_escalates_until_first_acceptance():
    s = make_strategy("uga_gp", scenario_ctx())
    init = s.state.qv.threshold
    vehicle = VehicleState(scenario.start_position())
    t = 0.0
    for k in range(3):
        for c in (0.9, 0.1, 0.9, 0.1, 0.9):
            dec = s.step(meas(t, -60.0, c), vehicle)
            t += 0.2
        assert dec.accepted is False
        assert s.state.qv.threshold == pytest.approx(init * 2 ** (k + 1))
    for _ in range(5):
        dec = s.step(meas(t, -60.0, 0.5), vehicle)
        t += 0.2
    assert dec.accepted is True and s.phase == "startup"
    assert dec.command is not None


# NYU

def test_fit_line_exact():
    assert fit_line([0, 1, 2, 3], [1, 3, 5, 7]) == pytest.approx((2.0, 1.0))


def test_fit_offset_recovers_source():
    # readings along a probe leg from a source 40 m beyond the boundary, 6 m along it
    inward = np.r_[np.linspace(0, 60, 31), np.zeros(21)]
    along = np.r_[np.zeros(31), np.linspace(-40, 40, 21)]
    alt = np.full(inward.size, 20.0)
    r2 = (inward + 40.0) ** 2 + (along - 6.0) ** 2 + alt ** 2
    rssi = -30.0 - 10 * 2.0 * np.log10(np.sqrt(r2))
    off, shift = fit_offset(inward, along, alt, rssi, 100.0, 50.0)
    assert off == pytest.approx(40.0, abs=0.5)
    assert shift == pytest.approx(6.0, abs=0.5)


def test_edge_peak_bins():
    x = np.linspace(0, 300, 301)
    v = -((x - 140.0) ** 2) / 100.0
    assert abs(edge_peak(x, v, 20.0) - 140.0) <= 10.0


def test_bo_phase_order():
    st = BoSearchState()
    st.advance("optimize")
    st.advance("boundary_probe")
    with pytest.raises(ValueError):
        st.advance("edge_traverse")


def run_clean(strategy, loc, seed=0):
    cfg = EpisodeConfig(rover_pos=scenario.locations()[loc], location=loc, strategy=strategy, seed=seed,
                        channel=channel_profile("clean"), channel_profile="clean")
    return run_episode(cfg)


def test_nyu_fast_estimate_near_start_corner():
    report, _ = run_clean("nyu_bo", "L1")
    assert report.fast_error_m <= 50.0


def test_nyu_probes_rover_outside_fence():
    report, log = run_clean("nyu_bo", "L3")
    phases = [r.phase for r in log.records]
    assert "boundary_probe" in phases
    order = ["edge_traverse", "optimize", "boundary_probe"]
    idx = [order.index(p) for p in phases]
    assert idx == sorted(idx)
    assert report.final_error_m <= 15.0


def test_every_strategy_registered():
    assert set(STRATEGIES) == {"baseline", "gradient", "nyu_bo", "unt_recursive", "uga_gp"}
    with pytest.raises(KeyError):
        make_strategy("baseline", scenario_ctx(), {"bogus": 1})


# snapshots

def test_snapshot_fallbacks():
    start = GeoPoint(35.7, -78.7, 50.0)
    est = GeoPoint(35.71, -78.69)
    hist = [(t, None) for t in np.arange(0, 600.1, 10)]
    assert snapshot_estimates(hist, start) == (start, start)
    hist = [(t, est if t >= 200 else None) for t in np.arange(0, 600.1, 10)]
    assert snapshot_estimates(hist, start) == (start, est)
    with pytest.raises(ValueError, match="fast"):
        snapshot_estimates([(0.0, est), (100.0, est)], start)
