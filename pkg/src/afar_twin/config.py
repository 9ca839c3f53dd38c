"""TOML run configuration.

A config file mirrors :class:`~afar_twin.harness.EpisodeConfig` plus parameter
tables for the channel, GP, sampling, each strategy, and benchmarks.  Every
key is optional except ``rover_pos`` for single runs.  Unknown keys are
rejected with a :class:`~afar_twin.harness.ConfigError` naming the key.
Command-line flags override file values.
"""

from __future__ import annotations

import sys
from dataclasses import MISSING, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import scenario
from .channel import PROFILES, ChannelParams, channel_profile
from .geodesy import GeoPoint, GeoRect
from .harness import ConfigError, EpisodeConfig
from .strategies import COMPETITION_STRATEGIES, STRATEGIES
from .strategies.base import GpSettings, SamplingSettings, params_from_dict

TOP_LEVEL = {
    "strategy": ("baseline", "search policy: " + " | ".join(STRATEGIES)),
    "seed": (0, "master seed for every random stream"),
    "channel_profile": ("emulator", "channel preset: " + " | ".join(PROFILES)),
    "dt": (0.1, "simulation step, seconds"),
    "duration_s": (600.0, "episode length; the final estimate is taken here"),
    "fast_deadline_s": (180.0, "time of the fast estimate"),
    "sample_period_s": (0.2, "seconds between channel readings"),
    "rover_pos": (None, "rover position: table {lat, lon} or a location name L1 | L2 | L3 (required for run)"),
    "start_pos": (None, "takeoff point {lat, lon, alt}; default the UAV fence SW corner at 50 m"),
}
POINT_KEYS = ("lat", "lon", "alt")
RECT_KEYS = ("south", "west", "north", "east", "alt_min", "alt_max")
BENCH_KEYS = {
    "seeds": (1, "number of seeds (0..N-1) or an explicit list"),
    "strategies": (list(COMPETITION_STRATEGIES), "strategies to compare"),
    "locations": (None, "table name -> {lat, lon}; default L1, L2, L3"),
    "workers": (1, "worker processes"),
}


@dataclass
class BenchSettings:
    seeds: list[int] = field(default_factory=lambda: [0])
    strategies: list[str] = field(default_factory=lambda: list(COMPETITION_STRATEGIES))
    locations: dict[str, GeoPoint] = field(default_factory=dict)
    workers: int = 1


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"not valid TOML: {exc}") from None


def _check_keys(table, allowed, prefix: str):
    if not isinstance(table, dict):
        raise ConfigError(prefix.rstrip("."), "expected a table")
    for key in table:
        if key not in allowed:
            raise ConfigError(prefix + key, "unknown key")


def _point(value, key: str, default_alt: float = 0.0) -> GeoPoint:
    _check_keys(value, POINT_KEYS, key + ".")
    for k in ("lat", "lon"):
        if k not in value:
            raise ConfigError(f"{key}.{k}", "missing")
    try:
        return GeoPoint(float(value["lat"]), float(value["lon"]), float(value.get("alt", default_alt)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, str(exc)) from None


def _rect(value, key: str, default: GeoRect) -> GeoRect:
    _check_keys(value, RECT_KEYS, key + ".")
    try:
        return replace(default, **{k: float(v) for k, v in value.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, str(exc)) from None


def _dataclass_table(cls, value, key: str, base=None):
    _check_keys(value, {f.name for f in fields(cls)}, key + ".")
    try:
        if base is not None:
            return replace(base, **value)
        return cls(**value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, str(exc)) from None


def _channel(profile: str, table) -> ChannelParams:
    if profile not in PROFILES:
        raise ConfigError("channel_profile", f"unknown profile {profile!r}; expected one of {sorted(PROFILES)}")
    table = dict(table or {})
    _check_keys(table, {f.name for f in fields(ChannelParams)}, "channel.")
    for k in ("fade_depth_db", "fade_confidence_factor"):
        if k in table:
            table[k] = tuple(table[k])
    try:
        return channel_profile(profile, **table)
    except (TypeError, ValueError) as exc:
        raise ConfigError("channel", str(exc)) from None


def _strategy_params(raw) -> dict[str, dict]:
    raw = raw or {}
    _check_keys(raw, STRATEGIES, "strategy_params.")
    out = {}
    for name, table in raw.items():
        cls = type(STRATEGIES[name].default_params())
        _check_keys(table, {f.name for f in fields(cls)}, f"strategy_params.{name}.")
        try:
            params_from_dict(cls, table)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"strategy_params.{name}", str(exc)) from None
        out[name] = dict(table)
    return out


def build_config(raw: dict, overrides: dict | None = None, require_rover: bool = True
                 ) -> tuple[EpisodeConfig, BenchSettings, dict[str, dict]]:
    """Turn a parsed TOML document plus flag overrides into run settings.

    Returns the episode config, the benchmark settings and the per-strategy
    parameter tables.  Overrides use the top-level key names plus ``seeds``
    (a count) and ``strategies`` (a list); ``None`` values are ignored.
    """
    raw = dict(raw or {})
    tables = {"origin", "uav_fence", "rover_fence", "channel", "gp", "sampling", "strategy_params", "benchmark"}
    _check_keys(raw, set(TOP_LEVEL) | tables, "")
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}

    origin = _point(raw["origin"], "origin") if "origin" in raw else scenario.ORIGIN
    uav = _rect(raw.get("uav_fence", {}), "uav_fence", scenario.uav_fence(origin))
    rover_fence = _rect(raw.get("rover_fence", {}), "rover_fence", scenario.rover_fence(origin))
    locs = scenario.locations(origin)

    bench_raw = raw.get("benchmark", {})
    _check_keys(bench_raw, BENCH_KEYS, "benchmark.")
    if "locations" in bench_raw:
        _check_keys(bench_raw["locations"], bench_raw["locations"], "benchmark.locations.")
        locs = {name: _point(p, f"benchmark.locations.{name}") for name, p in bench_raw["locations"].items()}
        if not locs:
            raise ConfigError("benchmark.locations", "must name at least one location")

    rover_val = raw.get("rover_pos")
    location = ""
    if rover_val is None:
        if require_rover:
            raise ConfigError("rover_pos", "missing; give a {lat, lon} table or a location name")
        rover = next(iter(locs.values()))
    elif isinstance(rover_val, str):
        if rover_val not in locs:
            raise ConfigError("rover_pos", f"unknown location {rover_val!r}; expected one of {sorted(locs)}")
        rover, location = locs[rover_val], rover_val
    else:
        rover = _point(rover_val, "rover_pos")

    start = _point(raw["start_pos"], "start_pos", scenario.START_ALT_M) if "start_pos" in raw else None

    strategy = ov.get("strategy", raw.get("strategy", "baseline"))
    if strategy not in STRATEGIES:
        raise ConfigError("strategy", f"unknown strategy {strategy!r}; expected one of {sorted(STRATEGIES)}")
    profile = ov.get("channel_profile", raw.get("channel_profile", "emulator"))
    sparams = _strategy_params(raw.get("strategy_params"))

    numbers = {}
    for key in ("seed", "dt", "duration_s", "fast_deadline_s", "sample_period_s"):
        value = ov.get(key, raw.get(key, TOP_LEVEL[key][0]))
        try:
            numbers[key] = int(value) if key == "seed" else float(value)
        except (TypeError, ValueError):
            raise ConfigError(key, f"expected a number, got {value!r}") from None

    cfg = EpisodeConfig(
        rover_pos=rover, uav_fence=uav, rover_fence=rover_fence, start_pos=start, origin=origin,
        channel=_channel(profile, raw.get("channel")), channel_profile=profile,
        strategy=strategy, strategy_params=sparams.get(strategy, {}),
        gp=_dataclass_table(GpSettings, raw.get("gp", {}), "gp"),
        sampling=_dataclass_table(SamplingSettings, raw.get("sampling", {}), "sampling"),
        location=location, **numbers,
    )
    if require_rover:
        cfg.validate()

    seeds = ov.get("seeds", bench_raw.get("seeds", BENCH_KEYS["seeds"][0]))
    if isinstance(seeds, int):
        if seeds < 1:
            raise ConfigError("seeds", "need at least one seed")
        seeds = list(range(seeds))
    elif not seeds:
        raise ConfigError("seeds", "need at least one seed")
    strategies = ov.get("strategies", bench_raw.get("strategies", BENCH_KEYS["strategies"][0]))
    if not strategies:
        raise ConfigError("strategies", "need at least one strategy")
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError("strategies", f"unknown strategy {s!r}")
    bench = BenchSettings(seeds=[int(s) for s in seeds], strategies=list(strategies), locations=locs,
                          workers=int(bench_raw.get("workers", 1)))
    return cfg, bench, sparams


def load_config(path=None, overrides: dict | None = None, require_rover: bool = True):
    """Read `path` (or start from defaults when None) and apply `overrides`."""
    raw = load_toml(Path(path)) if path is not None else {}
    return build_config(raw, overrides, require_rover)


def _default_of(f) -> object:
    if f.default is not MISSING:
        return f.default
    if f.default_factory is not MISSING:
        return f.default_factory()
    return None


def describe_keys() -> str:
    """Every config key with its default, one per line."""
    lines = ["top level:"]
    for key, (default, doc) in TOP_LEVEL.items():
        lines.append(f"  {key} = {default!r}  # {doc}")
    lines.append("[origin] lat, lon, alt  # ENU origin; default "
                 f"{scenario.ORIGIN.lat}, {scenario.ORIGIN.lon}, 0")
    for title, rect in (("uav_fence", scenario.uav_fence()), ("rover_fence", scenario.rover_fence())):
        lines.append(f"[{title}]")
        for k in RECT_KEYS:
            lines.append(f"  {k} = {getattr(rect, k)!r}")
    for title, cls in (("channel", ChannelParams), ("gp", GpSettings), ("sampling", SamplingSettings)):
        lines.append(f"[{title}]")
        for f in fields(cls):
            lines.append(f"  {f.name} = {_default_of(f)!r}")
    lines.append("  (channel defaults shown before the profile is applied; profiles: "
                 + "; ".join(f"{k}: {v}" for k, v in PROFILES.items()) + ")")
    for name, cls in STRATEGIES.items():
        lines.append(f"[strategy_params.{name}]")
        for f in fields(type(cls.default_params())):
            lines.append(f"  {f.name} = {_default_of(f)!r}")
    lines.append("[benchmark]")
    for key, (default, doc) in BENCH_KEYS.items():
        lines.append(f"  {key} = {default!r}  # {doc}")
    return "\n".join(lines)
