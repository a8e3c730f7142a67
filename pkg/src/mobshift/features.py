"""Per-staypoint feature tensors for every trip of a period split."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data_model import PeriodSplit
from .spatial import DEFAULT_RADII, BufferQuery, SpatialFeatureIndex
from .temporal import DEFAULT_TZ_OFFSET_H, encode_staypoints

FEATURES_VERSION = 1


@dataclass
class FeatureSet:
    temporal: np.ndarray   # (n_staypoints, 42)
    spatial: np.ndarray    # (n_staypoints, 3 * n_categories)
    offsets: np.ndarray    # (n_trips + 1,) staypoint offsets per trip
    individual_id: np.ndarray
    trip_id: np.ndarray
    period: np.ndarray     # "train" / "test"
    t_start: np.ndarray

    def __len__(self):
        return len(self.trip_id)

    def trip(self, i: int):
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return self.temporal[lo:hi], self.spatial[lo:hi]

    def select(self, period: str) -> list[int]:
        return [i for i in range(len(self)) if self.period[i] == period]

    def trips(self, indices) -> list[tuple[np.ndarray, np.ndarray]]:
        return [self.trip(i) for i in indices]

    def keys(self, indices) -> list[tuple[str, float]]:
        return [(str(self.individual_id[i]), float(self.t_start[i])) for i in indices]

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as f:
            np.savez(f, version=np.int64(FEATURES_VERSION), temporal=self.temporal, spatial=self.spatial,
                     offsets=self.offsets, individual_id=self.individual_id.astype(str),
                     trip_id=self.trip_id, period=self.period.astype(str), t_start=self.t_start)

    @classmethod
    def load(cls, path: str | Path) -> "FeatureSet":
        with np.load(path, allow_pickle=False) as z:
            if int(z["version"]) != FEATURES_VERSION:
                raise ValueError(f"{path}: unsupported feature file version")
            return cls(z["temporal"], z["spatial"], z["offsets"], z["individual_id"], z["trip_id"],
                       z["period"], z["t_start"])


def build_features(split: PeriodSplit, index: SpatialFeatureIndex, radii=DEFAULT_RADII,
                   tz_offset: float = DEFAULT_TZ_OFFSET_H) -> FeatureSet:
    tagged = [(t, "train") for t in split.train_trips] + [(t, "test") for t in split.test_trips]
    tagged.sort(key=lambda x: (x[0].individual_id, x[0].t_start))
    staypoints = [sp for t, _ in tagged for sp in t.staypoints]
    lengths = [len(t) for t, _ in tagged]
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    temporal = encode_staypoints(staypoints, tz_offset)
    query = BufferQuery(index)
    counts = query.counts(np.array([s.lat for s in staypoints]), np.array([s.lon for s in staypoints]), radii)
    spatial = np.log1p(counts.reshape(len(staypoints), -1))
    return FeatureSet(
        temporal=temporal,
        spatial=spatial,
        offsets=offsets,
        individual_id=np.array([t.individual_id for t, _ in tagged], dtype=str),
        trip_id=np.array([t.trip_id for t, _ in tagged], dtype=np.int64),
        period=np.array([p for _, p in tagged], dtype=str),
        t_start=np.array([t.t_start for t, _ in tagged], dtype=np.float64),
    )
