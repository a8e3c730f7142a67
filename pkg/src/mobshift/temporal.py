"""Fixed-width temporal encoding of a staypoint.

Layout of the 42-wide vector::

    [0:24)   hour of day, one-hot
    [24:31)  day of week, one-hot (0 = Monday)
    [31:35)  time period, one-hot (night, morning, afternoon, evening)
    35       weekend flag
    36       dwell duration / 24 h, clipped to 1
    37       season (Dec-Feb, Mar-May, Jun-Aug, Sep-Nov -> 0, 1/3, 2/3, 1)
    38:40    sin, cos of hour angle (hour + minute/60)
    40:42    sin, cos of day-of-week angle
"""
from __future__ import annotations

import math
from datetime import datetime, timedelta, timezone

import numpy as np

TEMPORAL_DIM = 42
HOUR, DOW, PERIOD = slice(0, 24), slice(24, 31), slice(31, 35)
WEEKEND, DURATION, SEASON = 35, 36, 37
HOUR_SIN, HOUR_COS, DOW_SIN, DOW_COS = 38, 39, 40, 41

DEFAULT_TZ_OFFSET_H = -8.0
DEFAULT_PERIOD_BOUNDS = (0, 6, 12, 18)


def _season(month: int) -> float:
    return ((month % 12) // 3) / 3.0


def encode_temporal(sp, tz_offset: float = DEFAULT_TZ_OFFSET_H, period_bounds=DEFAULT_PERIOD_BOUNDS) -> np.ndarray:
    """Encode a staypoint (anything with ``t_start``/``t_end`` epoch seconds)."""
    return encode_times(sp.t_start, sp.t_end, tz_offset, period_bounds)


def encode_times(t_start: float, t_end: float, tz_offset: float = DEFAULT_TZ_OFFSET_H,
                 period_bounds=DEFAULT_PERIOD_BOUNDS) -> np.ndarray:
    local = datetime.fromtimestamp(t_start, tz=timezone.utc) + timedelta(hours=tz_offset)
    hour = local.hour
    dow = local.weekday()
    v = np.zeros(TEMPORAL_DIM)
    v[hour] = 1.0
    v[24 + dow] = 1.0
    period = sum(1 for b in period_bounds[1:] if hour >= b)
    v[31 + period] = 1.0
    v[WEEKEND] = 1.0 if dow >= 5 else 0.0
    v[DURATION] = min(max(t_end - t_start, 0.0) / 86400.0, 1.0)
    v[SEASON] = _season(local.month)
    hour_frac = hour + local.minute / 60.0 + local.second / 3600.0
    a = 2.0 * math.pi * hour_frac / 24.0
    v[HOUR_SIN], v[HOUR_COS] = math.sin(a), math.cos(a)
    b = 2.0 * math.pi * dow / 7.0
    v[DOW_SIN], v[DOW_COS] = math.sin(b), math.cos(b)
    return v


def encode_staypoints(staypoints, tz_offset: float = DEFAULT_TZ_OFFSET_H,
                      period_bounds=DEFAULT_PERIOD_BOUNDS) -> np.ndarray:
    """Stack ``encode_temporal`` over a sequence of staypoints, shape (n, 42)."""
    out = np.zeros((len(staypoints), TEMPORAL_DIM))
    for i, sp in enumerate(staypoints):
        out[i] = encode_times(sp.t_start, sp.t_end, tz_offset, period_bounds)
    return out
