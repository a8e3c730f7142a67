import io

import numpy as np
import pytest

from mobshift.metrics import MetricUndefined, auroc, average_precision, evaluate, read_labels

from helpers import ap_ranks, auroc_pairs, metric_configurations


def test_auroc_examples():
    assert auroc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert auroc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 0.0
    assert auroc([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == 0.75
    assert auroc([0.5, 0.5], [1, 0]) == 0.5


def test_ap_examples():
    assert average_precision([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert average_precision([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == pytest.approx((1 + 2 / 3) / 2)
    assert average_precision([0.9, 0.8, 0.7, 0.6, 0.5], [0, 0, 0, 0, 1]) == pytest.approx(1 / 5)


def test_ap_tie_break_by_id():
    scores, labels = [0.5, 0.5], [1, 0]
    assert average_precision(scores, labels, ids=["b", "a"]) == 0.5
    assert average_precision(scores, labels, ids=["a", "b"]) == 1.0


def test_undefined_metrics():
    with pytest.raises(MetricUndefined, match="auroc"):
        auroc([0.1, 0.2], [1, 1])
    with pytest.raises(MetricUndefined, match="average precision"):
        average_precision([0.1, 0.2], [0, 0])


def test_exhaustive_small_configurations():
    r = np.random.default_rng(0)
    for scores, labels in metric_configurations(5):
        n = len(scores)
        ids = [f"i{p:02d}" for p in range(n)]
        perm = r.permutation(n)
        s, y, i = [scores[p] for p in perm], [labels[p] for p in perm], [ids[p] for p in perm]
        if 0 < sum(labels) < n:
            assert auroc(s, y) == pytest.approx(auroc_pairs(scores, labels), abs=1e-12)
        if sum(labels):
            assert average_precision(s, y, i) == pytest.approx(ap_ranks(scores, labels, ids), abs=1e-12)


def test_auroc_monotone_transform_invariance(rng):
    s = rng.normal(size=200)
    y = rng.random(200) < 0.3
    assert auroc(s, y) == auroc(s ** 3, y) == auroc(np.exp(s), y)


def test_random_scores_statistics():
    r = np.random.default_rng(2024)
    y = np.arange(10_000) % 2
    assert abs(auroc(r.random(10_000), y) - 0.5) < 0.05
    prevalence = 0.1
    y = (np.arange(5000) % 10 == 0).astype(int)
    aps = [average_precision(r.random(5000), y) for _ in range(20)]
    assert abs(np.mean(aps) - prevalence) < 0.03
    assert average_precision(y.astype(float), y) == 1.0 >= prevalence


def test_read_labels_and_evaluate():
    labels = read_labels(io.StringIO("individual_id,label\na,1\nb,0\nc,0\n"))
    assert labels == {"a": 1, "b": 0, "c": 0}
    out = evaluate({"a": 0.9, "b": 0.5, "c": 0.1, "extra": 1.0}, labels)
    assert out == {"auroc": 1.0, "ap": 1.0, "n": 3, "n_positive": 1}
    with pytest.raises(ValueError):
        read_labels(io.StringIO("individual_id,label\na,2\n"))
