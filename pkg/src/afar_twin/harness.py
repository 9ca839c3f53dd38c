"""Episode execution, competition scoring, flight logs and benchmarks.

An episode is a fixed-step synchronous loop; simulated time is the only clock
anyone sees.  Scores are always computed from the flight log itself, so
replaying a written log reproduces the original report exactly.
"""

from __future__ import annotations

import io
import json
import logging
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import scenario
from .channel import ChannelParams, channel_profile, init_fade_state, sample_measurement
from .geodesy import GeoPoint, GeoRect, contains, distance_3d, horizontal_distance
from .gp import RadioMapGrid, gp_fit
from .strategies import make_strategy
from .strategies.base import GpSettings, SamplingSettings, SearchContext, Strategy, snapshot_estimates
from .vehicle import VehicleState, set_waypoint, step

log = logging.getLogger(__name__)

SCHEMA = "afar-flightlog/1"
LOG_FIELDS = ("t", "lat", "lon", "alt", "tilt_deg", "rssi_dbm", "confidence",
              "accepted", "est_lat", "est_lon", "phase")


class ConfigError(ValueError):
    """Invalid episode or run configuration; `key` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class LogError(ValueError):
    pass


class SchemaMismatchError(LogError):
    pass


class TruncatedLogError(LogError):
    pass


@dataclass(frozen=True)
class EpisodeConfig:
    rover_pos: GeoPoint
    uav_fence: GeoRect = field(default_factory=scenario.uav_fence)
    rover_fence: GeoRect = field(default_factory=scenario.rover_fence)
    start_pos: GeoPoint | None = None
    origin: GeoPoint = scenario.ORIGIN
    channel: ChannelParams = field(default_factory=lambda: channel_profile("emulator"))
    channel_profile: str = "emulator"
    strategy: str = "baseline"
    strategy_params: dict = field(default_factory=dict)
    seed: int = 0
    dt: float = 0.1
    duration_s: float = 600.0
    fast_deadline_s: float = 180.0
    sample_period_s: float = 0.2
    gp: GpSettings = GpSettings()
    sampling: SamplingSettings = SamplingSettings()
    location: str = ""

    @property
    def start(self) -> GeoPoint:
        if self.start_pos is not None:
            return self.start_pos
        return scenario.start_position(self.uav_fence)

    def validate(self):
        if not contains(self.rover_fence, self.rover_pos):
            raise ConfigError("rover_pos", "must lie inside rover_fence")
        if not contains(self.uav_fence, self.start, check_alt=True):
            raise ConfigError("start_pos", "must lie inside uav_fence and its altitude band")
        if not self.dt > 0:
            raise ConfigError("dt", "must be positive")
        if not self.duration_s > 0:
            raise ConfigError("duration_s", "must be positive")
        if not 0 < self.fast_deadline_s <= self.duration_s:
            raise ConfigError("fast_deadline_s", "must lie in (0, duration_s]")
        for key in ("sample_period_s", "duration_s", "fast_deadline_s"):
            ratio = getattr(self, key) / self.dt
            if abs(ratio - round(ratio)) > 1e-6:
                raise ConfigError(key, "must be a whole multiple of dt")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")

    def context(self) -> SearchContext:
        return SearchContext(
            uav_fence=self.uav_fence, rover_fence=self.rover_fence, origin=self.origin,
            start_pos=self.start, duration_s=self.duration_s, fast_deadline_s=self.fast_deadline_s,
            sample_period_s=self.sample_period_s, gp=self.gp, sampling=self.sampling,
        )


class LogRecord(NamedTuple):
    t: float
    lat: float
    lon: float
    alt: float
    tilt_deg: float
    rssi_dbm: float
    confidence: float
    accepted: int | None
    est_lat: float | None
    est_lon: float | None
    phase: str


def _r9(x: float) -> float:
    return float(f"{x:.9g}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    return f"{v:.9g}"


class FlightLog:
    """Ordered per-sample records plus a small metadata header.

    On disk this is a CSV file preceded by ``#`` comment lines: the first holds
    the schema tag, the second a JSON object with episode metadata.
    """

    def __init__(self, meta: dict, records: list[LogRecord] | None = None):
        self.meta = meta
        self.records: list[LogRecord] = records if records is not None else []

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        return isinstance(other, FlightLog) and self.meta == other.meta and self.records == other.records

    def append(self, t, pos: GeoPoint, tilt, rssi, conf, accepted, est: GeoPoint | None, phase: str):
        if self.records and t <= self.records[-1].t:
            raise ValueError("flight log timestamps must be strictly increasing")
        self.records.append(LogRecord(
            _r9(t), _r9(pos.lat), _r9(pos.lon), _r9(pos.alt), _r9(tilt), _r9(rssi), _r9(conf),
            None if accepted is None else int(bool(accepted)),
            None if est is None else _r9(est.lat), None if est is None else _r9(est.lon),
            phase,
        ))

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {SCHEMA}\n")
        buf.write("# " + json.dumps(self.meta, sort_keys=True, separators=(",", ":")) + "\n")
        buf.write(",".join(LOG_FIELDS) + "\n")
        for r in self.records:
            buf.write(",".join(_fmt(v) for v in r) + "\n")
        return buf.getvalue()

    def write(self, path):
        Path(path).write_text(self.to_text(), newline="\n")

    @classmethod
    def parse(cls, text: str) -> "FlightLog":
        lines = text.split("\n")
        if not lines or lines[0].strip() != f"# {SCHEMA}":
            raise SchemaMismatchError(f"expected schema {SCHEMA!r}, found {lines[0][:40]!r}")
        try:
            meta = json.loads(lines[1][2:])
        except (IndexError, json.JSONDecodeError) as exc:
            raise LogError(f"unreadable metadata line: {exc}") from None
        if len(lines) < 3 or lines[2].strip() != ",".join(LOG_FIELDS):
            raise SchemaMismatchError("unexpected column header")
        records = []
        for n, line in enumerate(lines[3:], start=4):
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(LOG_FIELDS):
                raise TruncatedLogError(f"line {n}: expected {len(LOG_FIELDS)} fields, got {len(parts)}")
            try:
                nums = [float(v) for v in parts[:7]]
                acc = None if parts[7] == "" else int(parts[7])
                elat = None if parts[8] == "" else float(parts[8])
                elon = None if parts[9] == "" else float(parts[9])
            except ValueError as exc:
                raise LogError(f"line {n}: {exc}") from None
            records.append(LogRecord(*nums, acc, elat, elon, parts[10]))
        return cls(meta, records)

    @classmethod
    def read(cls, path) -> "FlightLog":
        return cls.parse(Path(path).read_text())

    def estimates(self) -> list[tuple[float, GeoPoint | None]]:
        return [(r.t, None if r.est_lat is None else GeoPoint(r.est_lat, r.est_lon, 0.0))
                for r in self.records]


@dataclass(frozen=True)
class ScoreReport:
    strategy: str
    location: str
    seed: int
    fast_error_m: float
    final_error_m: float
    fast_estimate: GeoPoint
    final_estimate: GeoPoint
    distance_flown_m: float
    samples_accepted: int
    samples_rejected: int


def score_log(flight_log: FlightLog, rover_pos: GeoPoint, start_pos: GeoPoint,
              fast_deadline_s: float = 180.0, final_deadline_s: float = 600.0) -> ScoreReport:
    """Competition score of a flight log: horizontal error of both snapshots."""
    if not flight_log.records:
        raise TruncatedLogError("empty flight log")
    try:
        fast, final = snapshot_estimates(flight_log.estimates(), start_pos, fast_deadline_s, final_deadline_s)
    except ValueError as exc:
        raise TruncatedLogError(str(exc)) from None
    recs = flight_log.records
    flown = 0.0
    prev = GeoPoint(recs[0].lat, recs[0].lon, recs[0].alt)
    for r in recs[1:]:
        cur = GeoPoint(r.lat, r.lon, r.alt)
        flown += distance_3d(prev, cur)
        prev = cur
    meta = flight_log.meta
    return ScoreReport(
        strategy=meta.get("strategy", ""),
        location=meta.get("location", ""),
        seed=int(meta.get("seed", 0)),
        fast_error_m=horizontal_distance(fast, rover_pos),
        final_error_m=horizontal_distance(final, rover_pos),
        fast_estimate=fast,
        final_estimate=final,
        distance_flown_m=flown,
        samples_accepted=sum(1 for r in recs if r.accepted == 1),
        samples_rejected=sum(1 for r in recs if r.accepted == 0),
    )


def _meta(cfg: EpisodeConfig) -> dict:
    def pt(p):
        return [p.lat, p.lon, p.alt]

    def rect(r):
        return [r.south, r.west, r.north, r.east, r.alt_min, r.alt_max]

    return {
        "strategy": cfg.strategy,
        "location": cfg.location,
        "seed": cfg.seed,
        "rover_pos": pt(cfg.rover_pos),
        "start_pos": pt(cfg.start),
        "origin": pt(cfg.origin),
        "uav_fence": rect(cfg.uav_fence),
        "rover_fence": rect(cfg.rover_fence),
        "dt": cfg.dt,
        "duration_s": cfg.duration_s,
        "fast_deadline_s": cfg.fast_deadline_s,
        "sample_period_s": cfg.sample_period_s,
        "channel_profile": cfg.channel_profile,
        "channel": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg.channel).items()},
        "gp": asdict(cfg.gp),
    }


def run_episode(cfg: EpisodeConfig, strategy: Strategy | None = None,
                keep_strategy: list | None = None) -> tuple[ScoreReport, FlightLog]:
    """Fly one 10-minute search and score it.

    A prebuilt `strategy` instance may be passed in place of the configured
    one.  When `keep_strategy` is a list the strategy object is appended to it
    so callers can inspect its final state (e.g. its radio map).
    """
    cfg.validate()
    if strategy is None:
        try:
            strategy = make_strategy(cfg.strategy, cfg.context(), cfg.strategy_params)
        except KeyError as exc:
            raise ConfigError(f"strategy_params.{cfg.strategy}.{exc.args[0]}", "unknown key") from None
        except ValueError as exc:
            raise ConfigError("strategy", str(exc)) from None
    if keep_strategy is not None:
        keep_strategy.append(strategy)

    n_ticks = round(cfg.duration_s / cfg.dt)
    every = round(cfg.sample_period_s / cfg.dt)
    fence = cfg.uav_fence
    rover = cfg.rover_pos
    channel = cfg.channel
    vehicle = VehicleState(pos=cfg.start)
    fade = init_fade_state(cfg.seed)
    flight_log = FlightLog(_meta(cfg))

    for tick in range(n_ticks + 1):
        if tick:
            vehicle = step(vehicle, cfg.dt, fence)
        if tick % every:
            continue
        t = round(tick * cfg.dt, 9)
        m, fade = sample_measurement(rover, vehicle.pos, vehicle.tilt_deg, channel, fade, t)
        dec = strategy.step(m, vehicle)
        if dec.command is not None:
            vehicle = VehicleState(vehicle.pos, vehicle.heading_deg, vehicle.speed_mps,
                                   vehicle.tilt_deg, vehicle.t, set_waypoint(vehicle, dec.command, fence))
        flight_log.append(t, vehicle.pos, vehicle.tilt_deg, m.rssi_dbm, m.confidence,
                          dec.accepted, dec.estimate, dec.phase)

    report = score_log(flight_log, rover, cfg.start, cfg.fast_deadline_s, cfg.duration_s)
    return report, flight_log


def replay(flight_log: FlightLog, cfg: EpisodeConfig) -> ScoreReport:
    """Re-score a flight log against the configuration it was produced with."""
    if not isinstance(flight_log, FlightLog):
        flight_log = FlightLog.parse(flight_log) if isinstance(flight_log, str) else FlightLog.read(flight_log)
    return score_log(flight_log, cfg.rover_pos, cfg.start, cfg.fast_deadline_s, cfg.duration_s)


def _episode_task(cfg: EpisodeConfig):
    try:
        return run_episode(cfg)[0], None
    except Exception as exc:  # noqa: BLE001 - a failed episode must not abort the batch
        return None, f"{type(exc).__name__}: {exc}"


@dataclass
class BenchmarkReport:
    rows: list[ScoreReport]
    failures: list[tuple[str, str, int, str]]
    locations: list[str]
    strategies: list[str]

    def errors(self, strategy: str, location: str, which: str = "final") -> list[float]:
        attr = f"{which}_error_m"
        return [getattr(r, attr) for r in self.rows if r.strategy == strategy and r.location == location]

    def location_median(self, strategy: str, location: str, which: str = "final") -> float:
        vals = self.errors(strategy, location, which)
        return statistics.median(vals) if vals else math.nan

    def average(self, strategy: str, which: str = "final") -> float:
        """Competition average: mean over locations of the per-location medians."""
        return competition_average([self.location_median(strategy, loc, which) for loc in self.locations])

    def seed_averages(self, strategy: str, which: str = "final") -> list[float]:
        """Per-seed competition average over locations (seeds with every location present)."""
        by_seed: dict[int, dict[str, float]] = {}
        for r in self.rows:
            if r.strategy == strategy:
                by_seed.setdefault(r.seed, {})[r.location] = getattr(r, f"{which}_error_m")
        return [competition_average([v[loc] for loc in self.locations])
                for _, v in sorted(by_seed.items()) if len(v) == len(self.locations)]

    def median_average(self, strategy: str, which: str = "final") -> float:
        vals = self.seed_averages(strategy, which)
        return statistics.median(vals) if vals else math.nan

    def summary_csv(self) -> str:
        out = io.StringIO()
        out.write("strategy,location,seed,fast_error_m,final_error_m\n")
        for r in self.rows:
            out.write(f"{r.strategy},{r.location},{r.seed},{r.fast_error_m:.9g},{r.final_error_m:.9g}\n")
        return out.getvalue()

    def table_text(self) -> str:
        """Per-strategy table laid out like the competition results table."""
        n = len(self.locations)
        header = (["Team"] + [f"Fast {i + 1}" for i in range(n)] + ["Fast Average"]
                  + [f"Final {i + 1}" for i in range(n)] + ["Final Average"])
        rows = []
        for s in self.strategies:
            cells = [s]
            for which in ("fast", "final"):
                meds = [self.location_median(s, loc, which) for loc in self.locations]
                cells += [f"{v:.1f}" for v in meds] + [f"{competition_average(meds):.2f}"]
            rows.append(cells)
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        fmt = lambda cells: " | ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths)))
        lines = [fmt(header), "-+-".join("-" * w for w in widths)] + [fmt(r) for r in rows]
        return "\n".join(lines) + "\n"


def competition_average(errors) -> float:
    """Mean of per-location errors, as the competition ranked teams."""
    errors = list(errors)
    if not errors:
        raise ValueError("no errors to average")
    return math.fsum(errors) / len(errors)


def run_benchmark(base_cfg: EpisodeConfig, locations: dict[str, GeoPoint] | None = None,
                  seeds=(0,), strategies=None, workers: int = 1, progress=None,
                  params_by_strategy: dict[str, dict] | None = None) -> BenchmarkReport:
    """Run every (strategy, location, seed) episode and aggregate the scores.

    Failed episodes are collected in ``failures`` rather than raised.  Rows are
    ordered by (strategy, location, seed) whatever the completion order.
    `params_by_strategy` maps strategy names to parameter tables; otherwise
    only the base config's own strategy keeps its parameters.
    """
    from dataclasses import replace

    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    locations = locations or scenario.locations(base_cfg.origin)
    strategies = list(strategies or [base_cfg.strategy])
    if not strategies:
        raise ValueError("need at least one strategy")
    jobs = []
    for s in strategies:
        if params_by_strategy is not None and s in params_by_strategy:
            params = params_by_strategy[s]
        else:
            params = base_cfg.strategy_params if s == base_cfg.strategy else {}
        for label, pos in locations.items():
            for seed in seeds:
                jobs.append(((s, label, seed),
                             replace(base_cfg, strategy=s, strategy_params=params, rover_pos=pos,
                                     location=label, seed=seed)))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_episode_task, [c for _, c in jobs]))
    else:
        results = []
        for key, c in jobs:
            results.append(_episode_task(c))
            if progress:
                progress(key, results[-1])
    rows, failures = [], []
    for (key, _), (report, err) in zip(jobs, results):
        if err is None:
            rows.append(report)
        else:
            log.warning("episode %s failed: %s", key, err)
            failures.append((*key, err))
    return BenchmarkReport(rows, failures, list(locations), strategies)


def export_geojson(flight_log: FlightLog, report: ScoreReport, rover_pos: GeoPoint) -> dict:
    """FeatureCollection with the flown path and the fast/final/true positions."""
    path = [[r.lon, r.lat, r.alt] for r in flight_log.records]

    def point(p: GeoPoint, role: str, **props):
        return {"type": "Feature", "geometry": {"type": "Point", "coordinates": [_r9(p.lon), _r9(p.lat)]},
                "properties": {"role": role, **props}}

    return {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "geometry": {"type": "LineString", "coordinates": path},
             "properties": {"role": "path", "strategy": report.strategy, "seed": report.seed,
                            "distance_flown_m": round(report.distance_flown_m, 3)}},
            point(report.fast_estimate, "fast_estimate", error_m=round(report.fast_error_m, 3)),
            point(report.final_estimate, "final_estimate", error_m=round(report.final_error_m, 3)),
            point(rover_pos, "rover"),
        ],
    }


def _meta_point(meta: dict, key: str) -> GeoPoint:
    try:
        lat, lon, alt = meta[key]
    except (KeyError, TypeError, ValueError):
        raise LogError(f"log metadata lacks {key!r}") from None
    return GeoPoint(float(lat), float(lon), float(alt))


def _meta_rect(meta: dict, key: str) -> GeoRect:
    try:
        return GeoRect(*(float(v) for v in meta[key]))
    except (KeyError, TypeError, ValueError):
        raise LogError(f"log metadata lacks {key!r}") from None


def score_from_meta(flight_log: FlightLog) -> ScoreReport:
    """Score a log using the rover, start and deadlines recorded in its header."""
    meta = flight_log.meta
    return score_log(flight_log, _meta_point(meta, "rover_pos"), _meta_point(meta, "start_pos"),
                     float(meta.get("fast_deadline_s", 180.0)), float(meta.get("duration_s", 600.0)))


def error_series(flight_log: FlightLog) -> list[tuple[float, float, str]]:
    """Per-record ``(t, error_m, marker)`` for error-vs-time plots.

    The error is the horizontal distance from the estimate held at that time
    (the start point before any estimate exists) to the rover.  The record
    taken at the fast deadline carries the marker ``fast_deadline`` and the
    one at the end of the episode ``final_deadline``; all others are empty.
    """
    meta = flight_log.meta
    rover = _meta_point(meta, "rover_pos")
    start = _meta_point(meta, "start_pos")
    fast_t = float(meta.get("fast_deadline_s", 180.0))
    final_t = float(meta.get("duration_s", 600.0))
    out = []
    fast_done = final_done = False
    for r in flight_log.records:
        est = start if r.est_lat is None else GeoPoint(r.est_lat, r.est_lon, 0.0)
        marker = ""
        if not fast_done and abs(r.t - fast_t) < 1e-6:
            marker, fast_done = "fast_deadline", True
        elif not final_done and abs(r.t - final_t) < 1e-6:
            marker, final_done = "final_deadline", True
        out.append((r.t, horizontal_distance(est, rover), marker))
    return out


GP_STRATEGIES = ("nyu_bo", "uga_gp")


def radio_map_from_log(flight_log: FlightLog, group: int = 5):
    """Rebuild the estimate-area radio map of a GP strategy from its log.

    Readings are averaged in consecutive groups of `group` into GP training
    points.  For ``uga_gp`` only the windows its quality gate accepted are
    used, each ending at a record flagged accepted.  Returns None for other
    strategies or when no training data is available.
    """
    meta = flight_log.meta
    if meta.get("strategy") not in GP_STRATEGIES:
        return None
    origin = _meta_point(meta, "origin")
    fence = _meta_rect(meta, "rover_fence")
    gp_cfg = GpSettings(**meta.get("gp", {}))
    recs = flight_log.records
    if meta["strategy"] == "uga_gp":
        windows = [recs[i - group + 1:i + 1] for i, r in enumerate(recs) if r.accepted == 1 and i + 1 >= group]
    else:
        windows = [recs[i:i + group] for i in range(0, len(recs) - group + 1, group)]
    if not windows:
        return None
    ctx = SearchContext(fence, fence, origin, origin)
    xy, y = [], []
    for w in windows:
        mid = ctx.enu(GeoPoint(w[len(w) // 2].lat, w[len(w) // 2].lon, 0.0))
        xy.append((mid.x, mid.y))
        y.append(math.fsum(r.rssi_dbm for r in w) / len(w))
    model = gp_fit(np.array(xy), np.array(y), gp_cfg.kernel)
    grid = RadioMapGrid(fence, origin, gp_cfg.nx, gp_cfg.ny)
    grid.update(model)
    return grid
