"""Measurement conditioning shared by the search strategies.

Two pieces live here: the fixed-length averaging buffer flown along perimeter
sweeps, and the quality-variance gate that drops readings taken while the
receiver's confidence is unstable.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace

from .channel import Measurement
from .geodesy import GeoPoint

_TIME_EPS = 1e-6


class SampleBuffer:
    """Averages consecutive readings in fixed-size groups.

    When the buffer fills it emits the mean rssi (in dB) and the position of
    entry ``capacity // 2 - 1``; for eight entries that is the earlier of the
    two middle samples, a point the vehicle actually visited.
    """

    def __init__(self, capacity: int = 8, period_s: float = 0.2):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.period_s = period_s
        self.entries: list[Measurement] = []
        self._last_t: float | None = None

    @property
    def center_index(self) -> int:
        return max(self.capacity // 2 - 1, 0)

    def push(self, m: Measurement) -> tuple[float, GeoPoint] | None:
        if self._last_t is not None and m.t < self._last_t + self.period_s - _TIME_EPS:
            raise ValueError(f"out-of-order sample: t={m.t} after t={self._last_t}")
        self._last_t = m.t
        self.entries.append(m)
        if len(self.entries) < self.capacity:
            return None
        avg = sum(e.rssi_dbm for e in self.entries) / len(self.entries)
        center = self.entries[self.center_index].rx_pos
        self.entries = []
        return avg, center

    def clear(self):
        self.entries = []


def buffer_push(buf: SampleBuffer, m: Measurement) -> tuple[float, GeoPoint] | None:
    return buf.push(m)


@dataclass(frozen=True)
class QvFilter:
    """Go/no-go gate on the variance of recent confidence readings.

    Until the first window is accepted, every rejection multiplies the
    threshold by `escalation`; afterwards the threshold is frozen.
    """

    window: int = 5
    threshold: float = 0.005
    escalation: float = 2.0
    accepted_any: bool = False
    n_accepted: int = 0
    n_rejected: int = 0

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be >= 2 to form a variance")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if not self.escalation > 1:
            raise ValueError("escalation must exceed 1")


def qv_accept(filt: QvFilter, recent: list[Measurement]) -> tuple[bool, float | None, QvFilter]:
    """Gate the last `filt.window` readings; returns (accepted, mean rssi, new filter)."""
    if len(recent) < filt.window:
        raise ValueError(f"need at least {filt.window} readings, got {len(recent)}")
    group = recent[-filt.window:]
    var = statistics.variance([m.confidence for m in group])
    if var <= filt.threshold:
        avg = sum(m.rssi_dbm for m in group) / len(group)
        return True, avg, replace(filt, accepted_any=True, n_accepted=filt.n_accepted + 1)
    threshold = filt.threshold if filt.accepted_any else filt.threshold * filt.escalation
    return False, None, replace(filt, threshold=threshold, n_rejected=filt.n_rejected + 1)
