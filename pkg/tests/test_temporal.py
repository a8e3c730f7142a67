import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mobshift.data_model import StayPoint
from mobshift.temporal import (DOW, DOW_COS, DOW_SIN, DURATION, HOUR, HOUR_COS, HOUR_SIN, PERIOD, SEASON,
                               WEEKEND, encode_staypoints, encode_temporal, encode_times)


def utc(*args):
    return datetime(*args, tzinfo=timezone.utc).timestamp()


def sp(t0, dur_h=0.0):
    return StayPoint("a", 0.0, 0.0, t0, t0 + dur_h * 3600.0)


def test_monday_midnight():
    v = encode_temporal(sp(utc(2024, 1, 1, 0, 0)), tz_offset=0.0)
    assert v.shape == (42,)
    assert np.argmax(v[HOUR]) == 0 and np.argmax(v[DOW]) == 0 and np.argmax(v[PERIOD]) == 0
    assert v[WEEKEND] == 0 and v[DURATION] == 0
    assert v[HOUR_SIN] == pytest.approx(0.0, abs=1e-15) and v[HOUR_COS] == 1.0


def test_saturday_noon():
    v = encode_temporal(sp(utc(2024, 1, 6, 12, 0)), tz_offset=0.0)
    assert v[WEEKEND] == 1 and np.argmax(v[PERIOD]) == 2
    assert v[HOUR_SIN] == pytest.approx(0.0, abs=1e-12) and v[HOUR_COS] == pytest.approx(-1.0)


def test_wednesday_evening_july():
    v = encode_temporal(sp(utc(2024, 7, 3, 18, 30), dur_h=6), tz_offset=0.0)
    assert np.argmax(v[HOUR]) == 18 and np.argmax(v[DOW]) == 2 and np.argmax(v[PERIOD]) == 3
    assert v[DURATION] == 0.25 and v[SEASON] == pytest.approx(2 / 3)
    a = 2 * math.pi * 18.5 / 24
    assert v[HOUR_SIN] == pytest.approx(math.sin(a)) and v[HOUR_COS] == pytest.approx(math.cos(a))


def test_default_offset_is_minus_eight():
    # 2024-01-01 08:00 UTC is Monday 00:00 at UTC-8
    v = encode_temporal(sp(utc(2024, 1, 1, 8, 0)))
    assert np.argmax(v[HOUR]) == 0 and np.argmax(v[DOW]) == 0


def test_duration_clipped_and_seasons():
    assert encode_temporal(sp(utc(2024, 3, 1), dur_h=30), 0.0)[DURATION] == 1.0
    seasons = [encode_temporal(sp(utc(2023, m, 15)), 0.0)[SEASON] for m in range(1, 13)]
    assert seasons == [0, 0, 1 / 3, 1 / 3, 1 / 3, 2 / 3, 2 / 3, 2 / 3, 1, 1, 1, 0]


times = st.floats(0, 2.0e9)


@given(times, st.floats(0, 3 * 86400), st.sampled_from([-8.0, 0.0, 5.5, 9.0]))
def test_invariants(t0, dur, tz):
    v = encode_times(t0, t0 + dur, tz)
    for block in (HOUR, DOW, PERIOD):
        assert sorted(v[block])[-1] == 1 and v[block].sum() == 1
    assert v[WEEKEND] in (0, 1) and 0 <= v[DURATION] <= 1 and v[SEASON] in (0, 1 / 3, 2 / 3, 1)
    assert abs(v[HOUR_SIN] ** 2 + v[HOUR_COS] ** 2 - 1) < 1e-9
    assert abs(v[DOW_SIN] ** 2 + v[DOW_COS] ** 2 - 1) < 1e-9
    # one-hot hour agrees with the cyclic angle
    ang = math.atan2(v[HOUR_SIN], v[HOUR_COS]) % (2 * math.pi)
    frac = ang * 24 / (2 * math.pi)
    h = int(np.argmax(v[HOUR]))
    assert h - 1e-6 <= frac < h + 1 + 1e-6 or (h == 0 and frac > 24 - 1e-6)
    assert np.array_equal(v, encode_times(t0, t0 + dur, tz))


@given(st.integers(1, 24), st.integers(0, 23), st.integers(0, 59), st.floats(0, 86400))
def test_weekly_periodicity_within_season(day, hour, minute, dur):
    # July 1-24 plus 7 days stays in summer
    t0 = utc(2024, 7, day, hour, minute)
    a = encode_times(t0, t0 + dur, 0.0)
    b = encode_times(t0 + 7 * 86400, t0 + 7 * 86400 + dur, 0.0)
    assert np.allclose(a, b, atol=1e-12)


def test_encode_staypoints_stacks():
    sps = [sp(utc(2024, 1, 1, h)) for h in range(5)]
    m = encode_staypoints(sps, 0.0)
    assert m.shape == (5, 42) and np.array_equal(m[3], encode_temporal(sps[3], 0.0))
