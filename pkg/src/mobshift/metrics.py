"""Ranking metrics for individual-level anomaly scores."""
from __future__ import annotations

import csv
from typing import TextIO

import numpy as np
from scipy.stats import rankdata


class MetricUndefined(ValueError):
    pass


def auroc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative (ties count 1/2)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefined("auroc is undefined without both positive and negative labels")
    ranks = rankdata(scores)  # average ranks give the half-credit for ties
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores, labels, ids=None) -> float:
    """Mean of precision@rank over the positives.

    Ranking is by score descending; equal scores are ordered by ``ids``
    (ascending) or, without ids, by input position.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise MetricUndefined("average precision is undefined without positive labels")
    keys = ids if ids is not None else np.arange(len(scores))
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], keys[i]))
    hits = labels[order]
    precision = np.cumsum(hits) / np.arange(1, len(hits) + 1)
    return float(precision[hits].sum() / n_pos)


def read_labels(stream: TextIO) -> dict[str, int]:
    out = {}
    for row in csv.DictReader(stream):
        lab = int(row["label"])
        if lab not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {lab}")
        out[row["individual_id"]] = lab
    return out


def evaluate(scores: dict[str, float], labels: dict[str, int]) -> dict:
    """AUROC and AP over individuals present in both mappings."""
    ids = sorted(set(scores) & set(labels))
    s = np.array([scores[i] for i in ids])
    y = np.array([labels[i] for i in ids])
    return {"auroc": auroc(s, y), "ap": average_precision(s, y, ids), "n": len(ids), "n_positive": int(y.sum())}
