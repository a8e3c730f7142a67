import filecmp

import pytest

from mobshift import synth
from mobshift.data_model import ingest_staypoints, segment_trips, split_periods
from mobshift.metrics import auroc


@pytest.fixture(scope="module")
def small():
    return synth.generate(synth.SynthConfig(n_individuals=60, anomaly_rate=0.1, seed=3))


def test_exact_anomaly_count_n1000():
    data = synth.generate(synth.SynthConfig(n_individuals=1000, anomaly_rate=0.05, train_days=7, test_days=7))
    assert sum(data.labels.values()) == 50 and len(data.labels) == 1000


def test_anomaly_types_round_robin(small):
    kinds = [t.anomaly_type for t in small.truth.values() if t.label]
    assert sorted(kinds.count(k) for k in synth.ANOMALY_TYPES) == [2, 2, 2]


def test_byte_identical_outputs(tmp_path, small):
    again = synth.generate(synth.SynthConfig(n_individuals=60, anomaly_rate=0.1, seed=3))
    a, b = synth.write(small, tmp_path / "a"), synth.write(again, tmp_path / "b")
    for key in a:
        assert filecmp.cmp(a[key], b[key], shallow=False), key
    other = synth.generate(synth.SynthConfig(n_individuals=60, anomaly_rate=0.1, seed=4))
    assert other.staypoints != small.staypoints


def test_disabling_anomalies():
    data = synth.generate(synth.SynthConfig(n_individuals=40, anomaly_rate=0.05, anomaly_types=()))
    assert set(data.labels.values()) == {0}


def test_invalid_configs():
    with pytest.raises(ValueError):
        synth.SynthConfig(n_individuals=30, anomaly_rate=0.05).n_anomalous
    with pytest.raises(ValueError):
        synth.SynthConfig(anomaly_types=("teleport",))
    with pytest.raises(ValueError):
        synth.SynthConfig(anomaly_rate=1.5)


def test_oracle_detector_is_perfect(small):
    scores = synth.oracle_scores(small.truth)
    ids = sorted(scores)
    assert auroc([scores[i] for i in ids], [small.labels[i] for i in ids]) == 1.0


def test_every_individual_has_trips_in_both_periods(small):
    grouped, rej = ingest_staypoints("individual_id,lat,lon,t_start,t_end\n" + "\n".join(
        ",".join(str(v) for v in row) for row in small.staypoints))
    assert rej == [] and set(grouped) == set(small.labels)
    for ind, sps in grouped.items():
        split = split_periods(segment_trips(sps), small.config.boundary)
        t = small.truth[ind]
        assert len(split.train_trips) == t.n_train >= 1
        assert len(split.test_trips) == t.n_test >= 1


def test_normal_individuals_keep_behavior(small):
    for t in small.truth.values():
        if not t.label:
            assert t.train_archetypes == t.test_archetypes and t.n_train == t.n_test
        elif t.anomaly_type == "frequency-change":
            assert t.n_train != t.n_test


def test_geojson_has_all_geometry_kinds(small):
    kinds = {f["geometry"]["type"] for f in small.geojson["features"]}
    assert {"Point", "Polygon", "LineString"} <= kinds


def test_individual_seed_is_stable():
    assert synth.individual_seed(7, "u00001") == synth.individual_seed(7, "u00001")
    assert synth.individual_seed(7, "u00001") != synth.individual_seed(8, "u00001")
