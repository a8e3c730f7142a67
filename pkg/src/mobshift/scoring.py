"""Six behavioral-change components and their weighted anomaly score."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .profiles import BehaviorProfile

COMPONENTS = ("s_dist", "s_new", "s_trans", "s_entropy", "s_freq", "s_dominant")
NO_TEST_TRIPS = "no_test_trips"
NO_TRAIN_PROFILE = "no_train_profile"


@dataclass(frozen=True)
class ScoreWeights:
    w_dist: float = 0.25
    w_new: float = 0.20
    w_trans: float = 0.15
    w_entropy: float = 0.15
    w_freq: float = 0.15
    w_dominant: float = 0.10

    def __post_init__(self):
        w = self.as_array()
        if (w < 0).any():
            raise ValueError("score weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"score weights must sum to 1, got {w.sum()!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.w_dist, self.w_new, self.w_trans, self.w_entropy, self.w_freq, self.w_dominant])


@dataclass
class AnomalyReport:
    individual_id: str
    components: np.ndarray
    total: float
    flags: list[str] = field(default_factory=list)

    def row(self) -> list:
        return [self.individual_id, *(repr(float(c)) for c in self.components), repr(float(self.total)),
                ";".join(self.flags)]


def _check_prob(p, name):
    p = np.asarray(p, dtype=np.float64)
    if (p < -1e-12).any() or abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"{name} is not a probability vector")
    return p


def js_divergence(P, Q) -> float:
    """Jensen-Shannon divergence in bits, in [0, 1]."""
    P = _check_prob(P, "P")
    Q = _check_prob(Q, "Q")
    Mx = 0.5 * (P + Q)

    def kl(a):
        nz = a > 0
        return float((a[nz] * np.log2(a[nz] / Mx[nz])).sum())

    return float(min(max(0.5 * kl(P) + 0.5 * kl(Q), 0.0), 1.0))


def new_behavior_mass(D_train, D_test, epsilon: float = 1e-6) -> float:
    """Test-period mass on clusters with training mass <= epsilon."""
    D_train = np.asarray(D_train, dtype=np.float64)
    D_test = np.asarray(D_test, dtype=np.float64)
    return float(min(D_test[D_train <= epsilon].sum(), 1.0))


def transition_change(M_train, M_test, K: int | None = None) -> float:
    """Frobenius distance between transition matrices divided by sqrt(2K)."""
    A = np.asarray(M_train, dtype=np.float64)
    B = np.asarray(M_test, dtype=np.float64)
    K = K if K is not None else A.shape[0]
    for name, X in (("M_train", A), ("M_test", B)):
        if X.shape != (K, K) or (X < -1e-12).any() or np.abs(X.sum(axis=1) - 1.0).max() > 1e-6:
            raise ValueError(f"{name} is not a row-stochastic {K}x{K} matrix")
    return float(min(np.linalg.norm(A - B, "fro") / math.sqrt(2 * K), 1.0))


def entropy_change(H_train: float, H_test: float, K: int) -> float:
    if K < 2:
        return 0.0
    return float(min(abs(H_train - H_test) / math.log2(K), 1.0))


def frequency_change(n_train: int, n_test: int) -> float:
    if n_train < 1:
        raise ValueError("n_train must be >= 1")
    return abs(n_train - n_test) / max(n_train, n_test)


def dominant_change(C_train: int, C_test: int) -> float:
    return 0.0 if C_train == C_test else 1.0


def anomaly_score(train: BehaviorProfile, test: BehaviorProfile | None, weights: ScoreWeights = ScoreWeights(),
                  epsilon: float = 1e-6) -> AnomalyReport:
    """Weighted behavioral-change score of one individual.

    ``test=None`` means the individual has no test-period trips: frequency
    change is maximal and every other component compares the training
    profile with itself.
    """
    flags = []
    K = train.K
    if test is None:
        flags.append(NO_TEST_TRIPS)
        test = BehaviorProfile(train.individual_id, train.D, train.M, train.C, train.H, 0)
    comps = np.array([
        js_divergence(train.D, test.D),
        new_behavior_mass(train.D, test.D, epsilon),
        transition_change(train.M, test.M, K),
        entropy_change(train.H, test.H, K),
        frequency_change(train.n, test.n),
        dominant_change(train.C, test.C),
    ])
    total = float(weights.as_array() @ comps)
    return AnomalyReport(train.individual_id, comps, total, flags)


def score_all(train_profiles: dict[str, BehaviorProfile], test_profiles: dict[str, BehaviorProfile],
              weights: ScoreWeights = ScoreWeights(), epsilon: float = 1e-6) -> tuple[list[AnomalyReport], list[str]]:
    """Score every individual with a training profile.

    Returns reports sorted by (total desc, individual_id asc) and the ids that
    only appear in the test period (excluded from the ranking).
    """
    reports = [anomaly_score(p, test_profiles.get(i), weights, epsilon) for i, p in train_profiles.items()]
    reports.sort(key=lambda r: (-r.total, r.individual_id))
    excluded = sorted(set(test_profiles) - set(train_profiles))
    return reports, excluded


def write_reports(reports: Iterable[AnomalyReport], stream: TextIO, excluded: Iterable[str] = ()) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["individual_id", *COMPONENTS, "total", "flags"])
    for r in reports:
        w.writerow(r.row())
    for ind in excluded:
        w.writerow([ind, *([""] * (len(COMPONENTS) + 1)), NO_TRAIN_PROFILE])


def read_scores(stream: TextIO) -> dict[str, float]:
    """individual_id -> total for ranked rows of a score report."""
    out = {}
    for row in csv.DictReader(stream):
        if row["total"]:
            out[row["individual_id"]] = float(row["total"])
    return out
