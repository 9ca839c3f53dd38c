"""Received-signal model between the rover transmitter and the UAV receiver.

The deterministic core is free-space path loss plus a simple antenna model
(an overhead null and a motion-tilt penalty).  On top of that sit zero-mean
Gaussian noise in the dB domain and an optional two-state Markov burst fade
that mimics receiver dropout.

The confidence statistic is a modeling choice: a clamped linear map of the
margin above the noise floor, degraded by a random factor while in a fade.
It is not the statistic computed by any real channel sounder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geodesy import EnuPoint, GeoPoint, to_enu
from .rng import RngStream

SPEED_OF_LIGHT = 299_792_458.0
MIN_DISTANCE_M = 1.0


@dataclass(frozen=True)
class ChannelParams:
    freq_hz: float = 3.4e9
    tx_power_dbm: float = 20.0
    noise_sigma_db: float = 10.0
    fades_enabled: bool = False
    fade_depth_db: tuple[float, float] = (30.0, 40.0)
    fade_enter_prob: float = 0.05
    fade_exit_prob: float = 0.30
    overhead_null_db: float = 10.0
    null_onset_deg: float = 60.0
    tilt_penalty_db_per_deg: float = 0.3
    noise_floor_dbm: float = -95.0
    confidence_span_db: float = 40.0
    fade_confidence_factor: tuple[float, float] = (0.2, 0.6)

    def __post_init__(self):
        if not self.freq_hz > 0:
            raise ValueError("freq_hz must be positive")
        if self.noise_sigma_db < 0:
            raise ValueError("noise_sigma_db must be non-negative")
        lo, hi = self.fade_depth_db
        if lo > hi:
            raise ValueError("fade_depth_db must be (min, max) with min <= max")
        for name in ("fade_enter_prob", "fade_exit_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if not 0.0 <= self.null_onset_deg < 90.0:
            raise ValueError("null_onset_deg must lie in [0, 90)")
        if not self.confidence_span_db > 0:
            raise ValueError("confidence_span_db must be positive")


PROFILES: dict[str, dict] = {
    # clean digital twin: free space plus white noise
    "emulator": {"noise_sigma_db": 10.0, "fades_enabled": False},
    # field-like: less white noise but frequent 30-40 dB dropouts
    "testbed": {"noise_sigma_db": 5.0, "fades_enabled": True},
    # no stochastic impairments at all (antenna effects remain)
    "clean": {"noise_sigma_db": 0.0, "fades_enabled": False},
}


def channel_profile(name: str, **overrides) -> ChannelParams:
    try:
        base = PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown channel profile {name!r}; expected one of {sorted(PROFILES)}") from None
    return ChannelParams(**{**base, **overrides})


@dataclass(frozen=True)
class FadeState:
    """Fade process state plus cursors into the channel's random streams."""

    in_fade: bool = False
    current_depth_db: float = 0.0
    fade_stream: RngStream | None = field(default=None, compare=False)
    fade_cursor: int = 0
    noise_stream: RngStream | None = field(default=None, compare=False)
    noise_cursor: int = 0


def init_fade_state(seed: int) -> FadeState:
    return FadeState(
        fade_stream=RngStream(seed, "channel.fade"),
        noise_stream=RngStream(seed, "channel.noise"),
    )


@dataclass(frozen=True)
class Measurement:
    t: float
    rx_pos: GeoPoint
    rssi_dbm: float
    confidence: float


def fspl_db(d: float, freq_hz: float) -> float:
    """Free-space path loss in dB; distances below 1 m are clamped."""
    d = max(d, MIN_DISTANCE_M)
    return 20.0 * math.log10(4.0 * math.pi * d * freq_hz / SPEED_OF_LIGHT)


def antenna_gain_db(rel: EnuPoint, tilt_deg: float, params: ChannelParams = ChannelParams()) -> float:
    """Non-positive antenna gain for a receiver at offset `rel` from the transmitter.

    The overhead null ramps linearly from zero at `null_onset_deg` elevation to
    `overhead_null_db` at zenith; motion tilt adds a linear penalty.
    """
    elev = math.degrees(math.atan2(rel.z, math.hypot(rel.x, rel.y)))
    ramp = (elev - params.null_onset_deg) / (90.0 - params.null_onset_deg)
    penalty = params.overhead_null_db * max(0.0, ramp) + params.tilt_penalty_db_per_deg * tilt_deg
    return -penalty


def mean_rssi_dbm(tx: GeoPoint, rx: GeoPoint, tilt_deg: float, params: ChannelParams) -> float:
    """Impairment-free received power (no noise, no fade, no floor)."""
    e = to_enu(rx, tx)
    d = math.sqrt(e.x * e.x + e.y * e.y + e.z * e.z)
    return params.tx_power_dbm - fspl_db(d, params.freq_hz) + antenna_gain_db(e, tilt_deg, params)


def confidence_from_rssi(rssi_dbm: float, params: ChannelParams, fade_factor: float = 1.0) -> float:
    c = (rssi_dbm - params.noise_floor_dbm) / params.confidence_span_db
    return min(max(c, 0.0), 1.0) * fade_factor


def _advance_fade(params: ChannelParams, state: FadeState) -> tuple[bool, float, int]:
    in_fade, depth, cur = state.in_fade, state.current_depth_db, state.fade_cursor
    if not params.fades_enabled:
        return False, 0.0, cur
    stream = state.fade_stream
    u = stream.uniform(cur)
    cur += 1
    if in_fade:
        if u < params.fade_exit_prob:
            in_fade, depth = False, 0.0
    elif u < params.fade_enter_prob:
        lo, hi = params.fade_depth_db
        in_fade, depth = True, lo + (hi - lo) * stream.uniform(cur)
        cur += 1
    return in_fade, depth, cur


def sample_measurement(tx: GeoPoint, rx: GeoPoint, tilt_deg: float, params: ChannelParams,
                       state: FadeState, t: float) -> tuple[Measurement, FadeState]:
    """Draw one (rssi, confidence) reading and advance the fade process one step.

    The fade state is advanced first and the new state applies to this
    sample.  Identical inputs and state always give identical outputs.
    """
    in_fade, depth, fcur = _advance_fade(params, state)

    noise = params.noise_sigma_db * state.noise_stream.normal(state.noise_cursor)
    rssi = mean_rssi_dbm(tx, rx, tilt_deg, params) - depth + noise
    rssi = max(rssi, params.noise_floor_dbm)

    factor = 1.0
    if in_fade:
        lo, hi = params.fade_confidence_factor
        factor = lo + (hi - lo) * state.fade_stream.uniform(fcur)
        fcur += 1
    conf = confidence_from_rssi(rssi, params, factor)

    new_state = replace(state, in_fade=in_fade, current_depth_db=depth,
                        fade_cursor=fcur, noise_cursor=state.noise_cursor + 1)
    return Measurement(t, rx, rssi, conf), new_state
