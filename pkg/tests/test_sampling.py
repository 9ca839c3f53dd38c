import statistics

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afar_twin.geodesy import GeoPoint
from afar_twin.sampling import QvFilter, SampleBuffer, buffer_push, qv_accept

from conftest import meas


def pushes(values, period=0.2):
    buf, out = SampleBuffer(), []
    for i, v in enumerate(values):
        m = meas(i * period, v, pos=GeoPoint(35.7, -78.7 + i * 1e-5, 20.0))
        r = buffer_push(buf, m)
        if r is not None:
            out.append((r, i))
    return out


def test_constant_input():
    (avg, center), _ = pushes([-60.0] * 8)[0]
    assert avg == -60.0
    # center is the fourth of eight samples
    assert center.lon == pytest.approx(-78.7 + 3e-5)


def test_hand_summed_mean():
    (avg, _), _ = pushes([-60, -62, -58, -60, -61, -59, -60, -60])[0]
    assert avg == pytest.approx(-60.0, abs=1e-12)


def test_partial_buffer_emits_nothing():
    assert pushes([-60.0] * 7) == []


def test_out_of_order_rejected():
    buf = SampleBuffer()
    buf.push(meas(1.0, -60))
    with pytest.raises(ValueError):
        buf.push(meas(0.8, -60))
    with pytest.raises(ValueError):
        buf.push(meas(1.1, -60))


@given(st.lists(st.floats(-95, -20), max_size=80))
def test_buffer_emission_count_and_means(values):
    out = pushes(values)
    assert len(out) == len(values) // 8
    for k, ((avg, _), last) in enumerate(out):
        assert last == 8 * k + 7
        assert abs(avg - float(np.mean(values[8 * k:8 * k + 8]))) <= 1e-12


def group(confs, rssi=-60.0):
    return [meas(i * 0.2, rssi, c) for i, c in enumerate(confs)]


def test_zero_variance_accepted():
    ok, avg, f = qv_accept(QvFilter(threshold=1e-9), group([0.9] * 5, -70.0))
    assert ok and avg == -70.0 and f.accepted_any


def test_high_variance_rejected():
    confs = [0.9, 0.1, 0.9, 0.1, 0.9]
    assert statistics.variance(confs) == pytest.approx(0.192)
    ok, avg, _ = qv_accept(QvFilter(threshold=0.01), group(confs))
    assert not ok and avg is None


def test_escalation_then_freeze():
    f = QvFilter(threshold=0.01, escalation=2.0)
    bad = group([0.9, 0.1, 0.9, 0.1, 0.9])
    thresholds = [f.threshold]
    for _ in range(2):
        _, _, f = qv_accept(f, bad)
        thresholds.append(f.threshold)
    assert f.threshold == pytest.approx(0.04)
    for _ in range(2):
        _, _, f = qv_accept(f, bad)
        thresholds.append(f.threshold)
    assert thresholds == pytest.approx([0.01 * 2 ** k for k in range(5)])
    ok, _, f = qv_accept(f, group([0.5] * 5))
    assert ok
    frozen = f.threshold
    _, _, f = qv_accept(f, bad)
    assert f.threshold == frozen and f.n_rejected == 5


def test_fades_raise_rejection_rate():
    rng = np.random.default_rng(0)
    filt = QvFilter(threshold=0.005, escalation=2.0, accepted_any=True)
    clean_rej = faded_rej = 0
    for _ in range(1000):
        base = np.clip(0.7 + 0.05 * rng.standard_normal(5), 0, 1)
        fade = np.where(rng.random(5) < 0.3, rng.uniform(0.2, 0.6, 5), 1.0)
        clean_rej += not qv_accept(filt, group(base))[0]
        faded_rej += not qv_accept(filt, group(base * fade))[0]
    assert faded_rej > clean_rej


def test_filter_validation():
    with pytest.raises(ValueError):
        QvFilter(threshold=0.0)
    with pytest.raises(ValueError):
        QvFilter(escalation=1.0)
    with pytest.raises(ValueError):
        qv_accept(QvFilter(), group([0.5] * 3))
