"""Per-individual behavioral profiles and cross-period cluster alignment."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np


@dataclass
class BehaviorProfile:
    individual_id: str
    D: np.ndarray  # cluster distribution, (K,)
    M: np.ndarray  # row-stochastic transitions, (K, K)
    C: int         # dominant cluster
    H: float       # entropy of D in bits
    n: int         # trip count

    @property
    def K(self) -> int:
        return len(self.D)

    def to_record(self, period: str) -> dict:
        return {"individual_id": self.individual_id, "period": period, "K": self.K,
                "D": self.D.tolist(), "M": self.M.tolist(), "C": self.C, "H": self.H, "n": self.n}

    @classmethod
    def from_record(cls, rec: dict) -> "BehaviorProfile":
        return cls(rec["individual_id"], np.asarray(rec["D"], dtype=np.float64),
                   np.asarray(rec["M"], dtype=np.float64), int(rec["C"]), float(rec["H"]), int(rec["n"]))


def entropy_bits(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum()) if nz.size else 0.0


def build_profile(cluster_sequence, K: int, individual_id: str = "") -> BehaviorProfile:
    """Profile from one individual's time-ordered trip cluster ids.

    Transition rows use add-one smoothing, so a single-trip sequence yields a
    uniform matrix.  Ties in the dominant cluster go to the lowest index.
    """
    seq = np.asarray(cluster_sequence, dtype=np.int64)
    if seq.size == 0:
        raise ValueError("cannot build a profile from an empty sequence")
    if seq.min() < 0 or seq.max() >= K:
        raise ValueError(f"cluster ids must lie in [0, {K})")
    counts = np.bincount(seq, minlength=K).astype(np.float64)
    D = counts / counts.sum()
    trans = np.ones((K, K))
    np.add.at(trans, (seq[:-1], seq[1:]), 1.0)
    M = trans / trans.sum(axis=1, keepdims=True)
    C = int(np.argmax(D))  # argmax returns the first maximum
    return BehaviorProfile(individual_id, D, M, C, entropy_bits(D), int(seq.size))


def canonical_order(centers: np.ndarray) -> np.ndarray:
    """Permutation putting centers in lexicographic order of their coordinates.

    Cluster ids from a trained model are arbitrary labels; relabelling the
    centers this way makes downstream ids depend only on the set of centers.
    """
    return np.lexsort(centers.T[::-1])


def align_cluster(z_mean: np.ndarray, centers: np.ndarray) -> int:
    """Index of the nearest center (Euclidean); ties go to the lowest index."""
    d = ((centers - np.asarray(z_mean)[None, :]) ** 2).sum(axis=1)
    return int(np.argmin(d))


def align_many(z_means: np.ndarray, centers: np.ndarray) -> np.ndarray:
    if len(z_means) == 0:
        return np.zeros(0, dtype=np.int64)
    d = ((z_means[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d, axis=1)


def assign_test_clusters(trip_features, trip_keys, model, centers) -> dict[str, list[int]]:
    """Encode and align trips; returns id -> cluster ids ordered by trip start.

    ``trip_keys`` holds (individual_id, t_start) for each trip.
    """
    from .model import encode_trips

    mu, _, _ = encode_trips(list(trip_features), model)
    labels = align_many(mu, centers)
    return group_sequences(trip_keys, labels)


def group_sequences(trip_keys, labels) -> dict[str, list[int]]:
    order = sorted(range(len(trip_keys)), key=lambda i: (trip_keys[i][0], trip_keys[i][1]))
    out: dict[str, list[int]] = {}
    for i in order:
        out.setdefault(trip_keys[i][0], []).append(int(labels[i]))
    return out


def write_profiles(records: Iterable[dict], stream: TextIO) -> None:
    for rec in records:
        stream.write(json.dumps(rec, sort_keys=True) + "\n")


def read_profiles(stream: TextIO) -> dict[tuple[str, str], BehaviorProfile]:
    out = {}
    for line in stream:
        if line.strip():
            rec = json.loads(line)
            out[(rec["individual_id"], rec["period"])] = BehaviorProfile.from_record(rec)
    return out
