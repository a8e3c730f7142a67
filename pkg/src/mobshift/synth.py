"""Deterministic synthetic mobility with injected individual-level anomalies.

Six archetypes combine three spatial zones (downtown, industrial, suburban)
with two daily schedules (day, night).  Zones differ only in the geographic
features planted around their anchors and schedules differ only in timing, so
telling all six apart needs both the spatial and the temporal features.

Normal individuals keep their 1-2 archetypes and their weekly trip rate in
both periods.  Anomalous individuals change in the test period in one of
three ways: their main archetype is replaced (``distribution-shift``), an
unused archetype takes half of their trips (``new-behavior``), or their trip
rate is halved or doubled (``frequency-change``).
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

ANOMALY_TYPES = ("distribution-shift", "new-behavior", "frequency-change")

# category index -> representative OSM tag (see categories.yaml)
CATEGORY_TAGS = [
    "building=yes", "landuse=residential", "landuse=commercial", "landuse=industrial",
    "highway=primary", "highway=residential", "railway=rail", "natural=water",
    "leisure=park", "amenity=restaurant", "shop=supermarket", "amenity=school", "natural=wood",
]

ZONES = {
    # name: (east offset m, north offset m, category weights over the 13 categories)
    "downtown": (0.0, 0.0, [4, 0.5, 5, 0, 2, 1, 1.5, 0, 0.5, 4, 4, 0.5, 0]),
    "industrial": (9000.0, -3000.0, [3, 0, 0.5, 6, 2, 0.5, 3, 1.5, 0, 0.3, 0.3, 0, 0.5]),
    "suburban": (-4000.0, 8000.0, [3, 6, 0.3, 0, 0.5, 3, 0, 0.5, 3, 0.5, 1, 2.5, 2]),
}
SCHEDULES = {
    # name: (earliest start hour, latest start hour), local time
    "day": (7.0, 10.0),
    "night": (19.0, 22.0),
}
ZONE_POLYGON_CATEGORY = {"downtown": 2, "industrial": 3, "suburban": 1}
M_PER_DEG_LAT = 111_195.0


@dataclass(frozen=True)
class Archetype:
    id: int
    zone: str
    schedule: str
    anchors: tuple  # ((lat, lon), ...)
    start_hours: tuple[float, float]
    trip_length: tuple[int, int] = (4, 6)


@dataclass
class SynthConfig:
    n_individuals: int = 500
    anomaly_rate: float = 0.05
    seed: int = 7
    train_days: int = 21
    test_days: int = 21
    start_date: str = "2024-04-01"  # a Monday, local time
    tz_offset: float = -8.0
    center_lat: float = 34.05
    center_lon: float = -118.25
    anchors_per_zone: int = 6
    anchor_spread_m: float = 1500.0
    jitter_m: float = 80.0
    features_per_anchor: int = 25
    background_features: int = 150
    second_archetype_prob: float = 0.4
    anomaly_types: tuple[str, ...] = ANOMALY_TYPES

    def __post_init__(self):
        self.anomaly_types = tuple(self.anomaly_types)
        unknown = set(self.anomaly_types) - set(ANOMALY_TYPES)
        if unknown:
            raise ValueError(f"unknown anomaly types: {sorted(unknown)}")
        if not 0.0 <= self.anomaly_rate <= 1.0:
            raise ValueError("anomaly_rate must lie in [0, 1]")

    @property
    def n_anomalous(self) -> int:
        if not self.anomaly_types:
            return 0
        exact = self.anomaly_rate * self.n_individuals
        if abs(exact - round(exact)) > 1e-6:
            raise ValueError(f"anomaly_rate * n_individuals = {exact} is not an integer")
        return int(round(exact))

    @property
    def boundary_local(self) -> float:
        return _local_epoch(self.start_date) + self.train_days * 86400.0

    @property
    def boundary(self) -> float:
        return self.boundary_local - self.tz_offset * 3600.0


@dataclass
class IndividualTruth:
    individual_id: str
    label: int
    anomaly_type: str | None
    train_archetypes: list[int] = field(default_factory=list)
    test_archetypes: list[int] = field(default_factory=list)
    n_train: int = 0
    n_test: int = 0
    train_sequence: list[int] = field(default_factory=list)  # archetype of each trip, in time order
    test_sequence: list[int] = field(default_factory=list)


@dataclass
class SynthData:
    staypoints: list[tuple]  # (individual_id, lat, lon, t_start, t_end), UTC epoch seconds
    geojson: dict
    labels: dict[str, int]
    truth: dict[str, IndividualTruth]
    config: SynthConfig


def _local_epoch(date: str) -> float:
    return datetime.fromisoformat(date).replace(tzinfo=timezone.utc).timestamp()


def _offset(lat, lon, east_m, north_m):
    return (lat + north_m / M_PER_DEG_LAT,
            lon + east_m / (M_PER_DEG_LAT * math.cos(math.radians(lat))))


def individual_seed(global_seed: int, individual_id: str) -> int:
    digest = hashlib.sha256(f"{global_seed}:{individual_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def make_archetypes(cfg: SynthConfig) -> list[Archetype]:
    rng = np.random.default_rng([cfg.seed, 0])
    archetypes = []
    for zone, (east, north, _) in ZONES.items():
        zlat, zlon = _offset(cfg.center_lat, cfg.center_lon, east, north)
        anchors = []
        for _ in range(cfg.anchors_per_zone):
            r = cfg.anchor_spread_m * math.sqrt(rng.random())
            a = 2 * math.pi * rng.random()
            anchors.append(_offset(zlat, zlon, r * math.cos(a), r * math.sin(a)))
        for schedule, hours in SCHEDULES.items():
            archetypes.append(Archetype(len(archetypes), zone, schedule, tuple(anchors), hours))
    return archetypes


def make_geojson(cfg: SynthConfig, archetypes: list[Archetype]) -> dict:
    rng = np.random.default_rng([cfg.seed, 1])
    feats = []

    def point(lat, lon, cat):
        feats.append({"type": "Feature", "properties": {"category": CATEGORY_TAGS[cat]},
                      "geometry": {"type": "Point", "coordinates": [round(lon, 7), round(lat, 7)]}})

    seen = set()
    for arch in archetypes:
        if arch.zone in seen:
            continue
        seen.add(arch.zone)
        w = np.asarray(ZONES[arch.zone][2], dtype=np.float64)
        w /= w.sum()
        for alat, alon in arch.anchors:
            for _ in range(cfg.features_per_anchor):
                e, n = rng.normal(0.0, 500.0, size=2)
                point(*_offset(alat, alon, e, n), int(rng.choice(len(w), p=w)))
            # one landuse block per anchor
            e0, n0 = rng.normal(0.0, 300.0, size=2)
            half = 150.0
            ring = [_offset(alat, alon, e0 + dx, n0 + dy) for dx, dy in
                    ((-half, -half), (half, -half), (half, half), (-half, half), (-half, -half))]
            feats.append({"type": "Feature",
                          "properties": {"category": CATEGORY_TAGS[ZONE_POLYGON_CATEGORY[arch.zone]]},
                          "geometry": {"type": "Polygon",
                                       "coordinates": [[[round(lo, 7), round(la, 7)] for la, lo in ring]]}})
        # a major road through the zone
        (alat, alon) = arch.anchors[0]
        line = [_offset(alat, alon, -1500.0 + 600.0 * i, 200.0 * ((-1) ** i)) for i in range(6)]
        feats.append({"type": "Feature", "properties": {"category": "highway=primary"},
                      "geometry": {"type": "LineString",
                                   "coordinates": [[round(lo, 7), round(la, 7)] for la, lo in line]}})
    for _ in range(cfg.background_features):
        e = rng.uniform(-8000.0, 13000.0)
        n = rng.uniform(-7000.0, 12000.0)
        point(*_offset(cfg.center_lat, cfg.center_lon, e, n), int(rng.integers(13)))
    return {"type": "FeatureCollection", "features": feats}


def _trip_days(rng, n_days: int, per_week: int) -> list[int]:
    """Day indices (with repetition for >7 trips/week) spread over whole weeks."""
    days = []
    for w0 in range(0, n_days, 7):
        span = min(7, n_days - w0)
        k = min(per_week, 2 * span)
        base = list(rng.permutation(span)[: min(k, span)])
        extra = list(rng.permutation(span)[: max(0, k - span)])
        days += [w0 + int(d) for d in base + extra]
    return sorted(days)


def _gen_period(rng, cfg, arch_by_id, mixture, anchors_for, per_week, day0, n_days, ind):
    ids = sorted(mixture)
    probs = np.array([mixture[i] for i in ids])
    probs /= probs.sum()
    rows = []
    used = []
    last_end = -np.inf
    t0 = _local_epoch(cfg.start_date)
    for d in _trip_days(rng, n_days, per_week):
        a = arch_by_id[ids[int(rng.choice(len(ids), p=probs))]]
        used.append(a.id)
        start = t0 + (day0 + d) * 86400.0 + rng.uniform(*a.start_hours) * 3600.0
        start = max(start, last_end + 3600.0)
        length = int(rng.integers(a.trip_length[0], a.trip_length[1] + 1))
        anchors = anchors_for[a.id]
        t = start
        for _ in range(length):
            alat, alon = anchors[int(rng.integers(len(anchors)))]
            e, n = rng.normal(0.0, cfg.jitter_m, size=2)
            lat, lon = _offset(alat, alon, e, n)
            dwell = rng.uniform(15.0, 45.0) * 60.0
            utc = t - cfg.tz_offset * 3600.0
            rows.append((ind, round(lat, 6), round(lon, 6), int(utc), int(utc + dwell)))
            t += dwell + rng.uniform(3.0, 20.0) * 60.0
        last_end = t
    return rows, used


def generate(cfg: SynthConfig | None = None) -> SynthData:
    cfg = cfg or SynthConfig()
    archetypes = make_archetypes(cfg)
    arch_by_id = {a.id: a for a in archetypes}
    n_arch = len(archetypes)
    ids = [f"u{i:05d}" for i in range(cfg.n_individuals)]

    pick = np.random.default_rng([cfg.seed, 2])
    anomalous = set(pick.permutation(cfg.n_individuals)[: cfg.n_anomalous].tolist())
    types = list(cfg.anomaly_types)
    order = sorted(anomalous)
    kind_of = {i: types[j % len(types)] for j, i in enumerate(pick.permutation(order).tolist())} if types else {}

    staypoints: list[tuple] = []
    labels: dict[str, int] = {}
    truth: dict[str, IndividualTruth] = {}
    for idx, ind in enumerate(ids):
        rng = np.random.default_rng(individual_seed(cfg.seed, ind))
        first = int(rng.integers(n_arch))
        mixture = {first: 1.0}
        if rng.random() < cfg.second_archetype_prob:
            second = int(rng.choice([a for a in range(n_arch) if a != first]))
            w = rng.uniform(0.6, 0.8)
            mixture = {first: w, second: 1.0 - w}
        per_week = int(rng.integers(4, 8))
        anchors_for = {}
        for a in archetypes:
            sel = rng.permutation(len(a.anchors))[:3]
            anchors_for[a.id] = [a.anchors[i] for i in sorted(sel)]

        kind = kind_of.get(idx)
        test_mixture, test_per_week = dict(mixture), per_week
        unused = [a for a in range(n_arch) if a not in mixture]
        if kind == "distribution-shift":
            new = int(rng.choice(unused))
            test_mixture = {new if a == first else a: w for a, w in mixture.items()}
        elif kind == "new-behavior":
            new = int(rng.choice(unused))
            test_mixture = {a: 0.5 * w for a, w in mixture.items()}
            test_mixture[new] = 0.5
        elif kind == "frequency-change":
            test_per_week = per_week // 2 if rng.random() < 0.5 else per_week * 2

        train_rows, train_used = _gen_period(rng, cfg, arch_by_id, mixture, anchors_for, per_week,
                                             0, cfg.train_days, ind)
        test_rows, test_used = _gen_period(rng, cfg, arch_by_id, test_mixture, anchors_for, test_per_week,
                                           cfg.train_days, cfg.test_days, ind)
        staypoints += train_rows + test_rows
        labels[ind] = int(kind is not None)
        truth[ind] = IndividualTruth(ind, labels[ind], kind, sorted(mixture), sorted(test_mixture),
                                     len(train_used), len(test_used), train_used, test_used)
    return SynthData(staypoints, make_geojson(cfg, archetypes), labels, truth, cfg)


def oracle_scores(truth: dict[str, IndividualTruth]) -> dict[str, float]:
    """Score 1 when the archetype set or the trip count changes between periods."""
    return {i: float(t.train_archetypes != t.test_archetypes or t.n_train != t.n_test) for i, t in truth.items()}


def write(data: SynthData, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"staypoints": out / "staypoints.csv", "geo_features": out / "features.geojson",
             "labels": out / "labels.csv", "meta": out / "meta.json"}
    with open(paths["staypoints"], "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["individual_id", "lat", "lon", "t_start", "t_end"])
        w.writerows(data.staypoints)
    with open(paths["geo_features"], "w") as f:
        json.dump(data.geojson, f)
    with open(paths["labels"], "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["individual_id", "label"])
        for ind in sorted(data.labels):
            w.writerow([ind, data.labels[ind]])
    meta = {"boundary": data.config.boundary, "config": asdict(data.config),
            "anomaly_types": {i: t.anomaly_type for i, t in sorted(data.truth.items()) if t.anomaly_type}}
    with open(paths["meta"], "w") as f:
        json.dump(meta, f, indent=1, sort_keys=True)
    return paths
