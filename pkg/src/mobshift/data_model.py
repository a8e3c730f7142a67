"""Staypoints, trips and the train/test period split."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, TextIO

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)

STAYPOINT_COLUMNS = ("individual_id", "lat", "lon", "t_start", "t_end")
DEFAULT_GAP_THRESHOLD_S = 1800.0
DEFAULT_MIN_TRIP_LENGTH = 4


@dataclass(frozen=True)
class StayPoint:
    individual_id: str
    lat: float
    lon: float
    t_start: float
    t_end: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"lat out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"lon out of range: {self.lon}")
        if self.t_end < self.t_start:
            raise ValueError(f"t_end {self.t_end} precedes t_start {self.t_start}")


@dataclass
class Trip:
    individual_id: str
    trip_id: int
    staypoints: list[StayPoint]

    @property
    def t_start(self) -> float:
        return self.staypoints[0].t_start

    def __len__(self):
        return len(self.staypoints)


@dataclass
class PeriodSplit:
    boundary: float
    train_trips: list[Trip] = field(default_factory=list)
    test_trips: list[Trip] = field(default_factory=list)


@dataclass
class Rejection:
    line: int
    reason: str


def parse_timestamp(value: str) -> float:
    """Epoch seconds from an integer/float epoch string or an ISO-8601 string.

    Naive ISO timestamps are taken as UTC.
    """
    value = value.strip()
    if not value:
        raise ValueError("empty timestamp")
    try:
        return float(int(value))
    except ValueError:
        pass
    try:
        x = float(value)
        if np.isfinite(x):
            return x
    except ValueError:
        pass
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def ingest_staypoints(source: TextIO | str, delimiter: str = ",") -> tuple[dict[str, list[StayPoint]], list[Rejection]]:
    """Read staypoint rows and group them by individual.

    ``source`` is an open text stream or the text itself.  Returns the
    per-individual lists (sorted by ``t_start``, stable for equal starts) and a
    list of rejected rows with their 1-based file line number.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source, delimiter=delimiter)
    rejections: list[Rejection] = []
    grouped: dict[str, list[StayPoint]] = {}
    header = None
    for line_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = [c.strip() for c in row]
            missing = [c for c in STAYPOINT_COLUMNS if c not in header]
            if missing:
                raise ValueError(f"staypoint header missing columns: {missing}")
            cols = [header.index(c) for c in STAYPOINT_COLUMNS]
            continue
        try:
            if len(row) < len(header):
                raise ValueError("too few fields")
            ind, lat, lon, ts, te = (row[i] for i in cols)
            ind = ind.strip()
            if not ind:
                raise ValueError("empty individual_id")
            lat_f, lon_f = float(lat), float(lon)
            if not (np.isfinite(lat_f) and np.isfinite(lon_f)):
                raise ValueError("non-finite coordinate")
            sp = StayPoint(ind, lat_f, lon_f, parse_timestamp(ts), parse_timestamp(te))
        except ValueError as exc:
            rejections.append(Rejection(line_no, str(exc)))
            continue
        grouped.setdefault(ind, []).append(sp)
    for ind in grouped:
        grouped[ind].sort(key=lambda s: s.t_start)
    if rejections:
        log.info("rejected %d staypoint rows", len(rejections))
    return grouped, rejections


def write_rejections(rejections: Iterable[Rejection], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["line", "reason"])
    for r in rejections:
        w.writerow([r.line, r.reason])


def segment_trips(
    staypoints: list[StayPoint],
    gap_threshold: float = DEFAULT_GAP_THRESHOLD_S,
    min_trip_length: int = DEFAULT_MIN_TRIP_LENGTH,
    first_trip_id: int = 0,
) -> list[Trip]:
    """Split one individual's time-sorted staypoints into trips.

    A gap ``t_start[i+1] - t_end[i]`` strictly greater than ``gap_threshold``
    (seconds) opens a new segment; a gap exactly at the threshold does not.
    A staypoint that starts before the previous kept one ends is dropped.
    Segments shorter than ``min_trip_length`` are discarded.
    """
    if not staypoints:
        return []
    t_start = np.array([s.t_start for s in staypoints], dtype=np.float64)
    t_end = np.array([s.t_end for s in staypoints], dtype=np.float64)
    seg = _kernels.segment_scan(t_start, t_end, float(gap_threshold))
    n_dropped = int((seg < 0).sum())
    if n_dropped:
        log.debug("%s: dropped %d overlapping staypoints", staypoints[0].individual_id, n_dropped)
    trips: list[Trip] = []
    trip_id = first_trip_id
    kept = np.flatnonzero(seg >= 0)
    if kept.size == 0:
        return trips
    boundaries = np.flatnonzero(np.diff(seg[kept])) + 1
    for chunk in np.split(kept, boundaries):
        if chunk.size >= min_trip_length:
            trips.append(Trip(staypoints[0].individual_id, trip_id, [staypoints[i] for i in chunk]))
            trip_id += 1
    return trips


def split_periods(trips: list[Trip], boundary: float) -> PeriodSplit:
    """Assign each trip by its first staypoint's start: before ``boundary`` is train."""
    split = PeriodSplit(boundary=boundary)
    for trip in trips:
        (split.train_trips if trip.t_start < boundary else split.test_trips).append(trip)
    return split
