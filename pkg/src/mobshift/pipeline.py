"""Staged pipeline over a run directory.

Stages and the artifacts they write (all inside the run directory)::

    synth     synth/staypoints.csv, synth/features.geojson, synth/labels.csv, synth/meta.json
    ingest    trips.csv, rejections.csv
    index     spatial_index.txt, index_skips.txt
    features  features.npz
    train     model.bin, centers.npy, loss_history.csv
    profile   assignments.csv, profiles.jsonl
    score     scores.csv
    evaluate  metrics.json

Each stage reads only persisted artifacts of earlier stages, so any stage can
be re-run on its own.  ``manifest.json`` records the config hash and the
version of every stage that has run.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
from dataclasses import asdict
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import data_model, metrics, model, profiles, scoring, spatial, synth
from .features import FeatureSet, build_features

log = logging.getLogger(__name__)

STAGES = ("ingest", "index", "features", "train", "profile", "score", "evaluate")
STAGE_VERSIONS = {"synth": 1, "ingest": 1, "index": 1, "features": 1, "train": 1, "profile": 1,
                  "score": 1, "evaluate": 1}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class MissingArtifact(FileNotFoundError):
    def __init__(self, path: Path):
        super().__init__(f"missing artifact: {path}")
        self.path = path


# --------------------------------------------------------------------------
# config
# --------------------------------------------------------------------------

def default_config() -> dict:
    return yaml.safe_load(resources.files("mobshift").joinpath("default_config.yaml").read_text())


def _merge(base: dict, over: dict, prefix="") -> dict:
    for k, v in over.items():
        key = f"{prefix}{k}"
        if k not in base:
            raise ConfigError(key, "unknown config key")
        if isinstance(base[k], dict) and isinstance(v, dict):
            _merge(base[k], v, key + ".")
        else:
            base[k] = v
    return base


def set_key(cfg: dict, dotted: str, raw: str) -> None:
    parts = dotted.split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(dotted, "unknown config key")
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError(dotted, "unknown config key")
    try:
        node[parts[-1]] = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(dotted, f"cannot parse value {raw!r}") from exc


def load_config(path: str | Path | None = None, overrides=()) -> dict:
    cfg = default_config()
    if path is not None:
        try:
            user = yaml.safe_load(Path(path).read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"invalid YAML: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError(str(path), "config must be a mapping")
        _merge(cfg, user)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(item, "override must look like key=value")
        set_key(cfg, key.strip(), value.strip())
    validate_config(cfg)
    return cfg


def _num(cfg, dotted, lo=None, integer=False, positive=False):
    node = cfg
    for p in dotted.split("."):
        node = node[p]
    ok = isinstance(node, (int, float)) and not isinstance(node, bool)
    if integer:
        ok = ok and float(node).is_integer()
    if ok and lo is not None:
        ok = node >= lo
    if ok and positive:
        ok = node > 0
    if not ok:
        raise ConfigError(dotted, f"invalid value {node!r}")
    return node


def validate_config(cfg: dict) -> None:
    _num(cfg, "segmentation.gap_threshold_h", lo=0)
    _num(cfg, "segmentation.min_trip_length", lo=1, integer=True)
    _num(cfg, "spatial.h3_resolution", lo=0, integer=True)
    if cfg["spatial"]["h3_resolution"] > 15:
        raise ConfigError("spatial.h3_resolution", "must be within 0-15")
    radii = cfg["spatial"]["radii_m"]
    if (not isinstance(radii, list) or not radii or any(not isinstance(r, (int, float)) for r in radii)
            or any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0):
        raise ConfigError("spatial.radii_m", "must be a non-empty, strictly increasing list of positive numbers")
    _num(cfg, "temporal.tz_offset_h")
    for k in ("K", "hidden", "latent", "epochs", "batch_size"):
        _num(cfg, f"model.{k}", lo=1, integer=True)
    for k in ("alpha", "beta", "grad_clip"):
        _num(cfg, f"model.{k}", lo=0)
    _num(cfg, "model.lr", positive=True)
    _num(cfg, "model.seed", lo=0, integer=True)
    _num(cfg, "model.kl_warmup_epochs", lo=0, integer=True)
    if cfg["model"].get("entropy_sign", -1.0) not in (-1, 1):
        raise ConfigError("model.entropy_sign", "must be -1 or 1")
    try:
        model_config(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError("model", str(exc)) from exc
    if not (cfg["features"]["use_temporal"] or cfg["features"]["use_spatial"]):
        raise ConfigError("features", "at least one of use_temporal / use_spatial must be true")
    try:
        scoring.ScoreWeights(**cfg["scoring"]["weights"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("scoring.weights", str(exc)) from exc
    _num(cfg, "scoring.new_behavior_epsilon", lo=0)
    b = cfg["period"]["boundary"]
    if b is not None and not isinstance(b, (int, float, str, datetime)):
        raise ConfigError("period.boundary", "must be epoch seconds or ISO-8601")
    try:
        synth.SynthConfig(**_synth_kwargs(cfg))
    except (TypeError, ValueError) as exc:
        raise ConfigError("synth", str(exc)) from exc


def _synth_kwargs(cfg):
    d = dict(cfg["synth"])
    d["tz_offset"] = cfg["temporal"]["tz_offset_h"]
    return d


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()


def model_config(cfg: dict) -> model.ModelConfig:
    m = dict(cfg["model"])
    m["use_temporal"] = bool(cfg["features"]["use_temporal"])
    m["use_spatial"] = bool(cfg["features"]["use_spatial"])
    return model.ModelConfig.from_dict(m)


# --------------------------------------------------------------------------
# run directory
# --------------------------------------------------------------------------

class Run:
    def __init__(self, out_dir: str | Path, cfg: dict):
        self.dir = Path(out_dir)
        self.cfg = cfg
        self.dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.dir / name

    def input_path(self, key: str) -> Path:
        p = self.cfg["paths"][key]
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else self.dir / p

    def need(self, p: Path) -> Path:
        if p is None or not p.exists():
            raise MissingArtifact(p)
        return p

    def record(self, stage: str, artifacts: list[str]) -> None:
        mpath = self.path("manifest.json")
        manifest = json.loads(mpath.read_text()) if mpath.exists() else {"stages": {}}
        manifest["config_hash"] = config_hash(self.cfg)
        manifest["stages"][stage] = {
            "version": STAGE_VERSIONS[stage],
            "config_hash": config_hash(self.cfg),
            "artifacts": {a: hashlib.sha256(self.path(a).read_bytes()).hexdigest() for a in artifacts},
        }
        mpath.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# stages
# --------------------------------------------------------------------------

def stage_synth(run: Run) -> None:
    data = synth.generate(synth.SynthConfig(**_synth_kwargs(run.cfg)))
    synth.write(data, run.path("synth"))
    run.record("synth", ["synth/staypoints.csv", "synth/features.geojson", "synth/labels.csv", "synth/meta.json"])


def _resolve_boundary(run: Run, grouped) -> float:
    b = run.cfg["period"]["boundary"]
    if isinstance(b, datetime):
        return (b if b.tzinfo else b.replace(tzinfo=timezone.utc)).timestamp()
    if isinstance(b, (int, float)):
        return float(b)
    if isinstance(b, str):
        try:
            return data_model.parse_timestamp(b)
        except ValueError as exc:
            raise ConfigError("period.boundary", str(exc)) from exc
    meta = run.input_path("staypoints").parent / "meta.json"
    if meta.exists():
        return float(json.loads(meta.read_text())["boundary"])
    starts = [s.t_start for sps in grouped.values() for s in sps]
    ends = [s.t_end for sps in grouped.values() for s in sps]
    return 0.5 * (min(starts) + max(ends)) if starts else 0.0


TRIP_COLUMNS = ["individual_id", "trip_id", "period", "seq", "lat", "lon", "t_start", "t_end"]


def stage_ingest(run: Run) -> None:
    src = run.need(run.input_path("staypoints"))
    with open(src, newline="") as f:
        grouped, rejections = data_model.ingest_staypoints(f)
    with open(run.path("rejections.csv"), "w", newline="") as f:
        data_model.write_rejections(rejections, f)
    seg = run.cfg["segmentation"]
    trips = []
    for ind in sorted(grouped):
        trips += data_model.segment_trips(grouped[ind], seg["gap_threshold_h"] * 3600.0, int(seg["min_trip_length"]))
    split = data_model.split_periods(trips, _resolve_boundary(run, grouped))
    with open(run.path("trips.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRIP_COLUMNS)
        for period, group in (("train", split.train_trips), ("test", split.test_trips)):
            for t in group:
                for i, s in enumerate(t.staypoints):
                    w.writerow([t.individual_id, t.trip_id, period, i, repr(s.lat), repr(s.lon),
                                repr(s.t_start), repr(s.t_end)])
    log.info("ingest: %d train / %d test trips, %d rejected rows", len(split.train_trips),
             len(split.test_trips), len(rejections))
    run.record("ingest", ["trips.csv", "rejections.csv"])


def read_trips(path: Path) -> data_model.PeriodSplit:
    by_key: dict[tuple[str, int], tuple[str, list]] = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            key = (row["individual_id"], int(row["trip_id"]))
            entry = by_key.setdefault(key, (row["period"], []))
            entry[1].append(data_model.StayPoint(row["individual_id"], float(row["lat"]), float(row["lon"]),
                                                 float(row["t_start"]), float(row["t_end"])))
    split = data_model.PeriodSplit(boundary=float("nan"))
    for (ind, tid), (period, sps) in by_key.items():
        trip = data_model.Trip(ind, tid, sps)
        (split.train_trips if period == "train" else split.test_trips).append(trip)
    return split


def stage_index(run: Run) -> None:
    src = run.need(run.input_path("geo_features"))
    cmap = spatial.CategoryMap.load(run.input_path("category_map"))
    feats, skipped = spatial.read_geojson(src, cmap)
    index, skipped2 = spatial.build_index(feats, int(run.cfg["spatial"]["h3_resolution"]), cmap.categories)
    index.save(run.path("spatial_index.txt"))
    run.path("index_skips.txt").write_text("".join(s + "\n" for s in skipped + skipped2))
    run.record("index", ["spatial_index.txt", "index_skips.txt"])


def stage_features(run: Run) -> None:
    split = read_trips(run.need(run.path("trips.csv")))
    index = spatial.SpatialFeatureIndex.load(run.need(run.path("spatial_index.txt")))
    fs = build_features(split, index, run.cfg["spatial"]["radii_m"], run.cfg["temporal"]["tz_offset_h"])
    fs.save(run.path("features.npz"))
    run.record("features", ["features.npz"])


def stage_train(run: Run, progress=None) -> None:
    fs = FeatureSet.load(run.need(run.path("features.npz")))
    train_idx = fs.select("train")
    trips = fs.trips(train_idx)
    mcfg = model_config(run.cfg)
    if len(trips) < mcfg.K:
        raise ConfigError("model.K", f"only {len(trips)} training trips for K={mcfg.K}")
    try:
        result = model.train(trips, mcfg, progress=progress)
    except model.TrainingDiverged as exc:
        if exc.model is not None:
            model.save_checkpoint(exc.model, run.path("model.last_good.bin"))
        raise
    model.save_checkpoint(result.model, run.path("model.bin"))
    centers = model.cluster_centers(result.model, trips)
    np.save(run.path("centers.npy"), centers[profiles.canonical_order(centers)])
    with open(run.path("loss_history.csv"), "w", newline="") as f:
        keys = list(result.history[0]) if result.history else ["epoch"]
        w = csv.DictWriter(f, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for rec in result.history:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})
    run.record("train", ["model.bin", "centers.npy", "loss_history.csv"])


def assign_all(fs: FeatureSet, mdl: model.ClusterModel, centers: np.ndarray):
    """Aligned cluster sequences per period: {period: {individual: [ids]}}."""
    centers = centers[profiles.canonical_order(centers)]
    out = {}
    for period in ("train", "test"):
        idx = fs.select(period)
        out[period] = profiles.assign_test_clusters(fs.trips(idx), fs.keys(idx), mdl, centers)
    return out


def build_period_profiles(sequences, K: int):
    return {period: {ind: profiles.build_profile(seq, K, ind) for ind, seq in seqs.items() if seq}
            for period, seqs in sequences.items()}


def stage_profile(run: Run) -> None:
    fs = FeatureSet.load(run.need(run.path("features.npz")))
    mdl = model.load_checkpoint(run.need(run.path("model.bin")))
    centers = np.load(run.need(run.path("centers.npy")))
    seqs = assign_all(fs, mdl, centers)
    with open(run.path("assignments.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["individual_id", "period", "order", "cluster"])
        for period in ("train", "test"):
            for ind in sorted(seqs[period]):
                for i, c in enumerate(seqs[period][ind]):
                    w.writerow([ind, period, i, c])
    profs = build_period_profiles(seqs, mdl.K)
    with open(run.path("profiles.jsonl"), "w") as f:
        profiles.write_profiles((p.to_record(period) for period in ("train", "test")
                                 for _, p in sorted(profs[period].items())), f)
    run.record("profile", ["assignments.csv", "profiles.jsonl"])


def score_profiles(profs: dict, cfg: dict):
    weights = scoring.ScoreWeights(**cfg["scoring"]["weights"])
    return scoring.score_all(profs.get("train", {}), profs.get("test", {}), weights,
                             float(cfg["scoring"]["new_behavior_epsilon"]))


def stage_score(run: Run) -> None:
    with open(run.need(run.path("profiles.jsonl"))) as f:
        loaded = profiles.read_profiles(f)
    profs: dict[str, dict] = {"train": {}, "test": {}}
    for (ind, period), p in loaded.items():
        profs[period][ind] = p
    reports, excluded = score_profiles(profs, run.cfg)
    with open(run.path("scores.csv"), "w", newline="") as f:
        scoring.write_reports(reports, f, excluded)
    run.record("score", ["scores.csv"])


def stage_evaluate(run: Run) -> dict:
    with open(run.need(run.path("scores.csv")), newline="") as f:
        scores = scoring.read_scores(f)
    with open(run.need(run.input_path("labels")), newline="") as f:
        labels = metrics.read_labels(f)
    try:
        summary = metrics.evaluate(scores, labels)
    except metrics.MetricUndefined as exc:
        raise ConfigError("labels", str(exc)) from exc
    run.path("metrics.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    run.record("evaluate", ["metrics.json"])
    return summary


STAGE_FUNCS = {"synth": stage_synth, "ingest": stage_ingest, "index": stage_index, "features": stage_features,
               "train": stage_train, "profile": stage_profile, "score": stage_score, "evaluate": stage_evaluate}


def run_stage(name: str, out_dir, cfg: dict):
    run = Run(out_dir, cfg)
    if name == "all":
        result = None
        for s in STAGES:
            log.info("stage %s", s)
            result = STAGE_FUNCS[s](run)
        return result
    return STAGE_FUNCS[name](run)


def with_overrides(cfg: dict, **dotted) -> dict:
    """Deep copy of ``cfg`` with ``{"a.b": value}`` style overrides applied."""
    out = copy.deepcopy(cfg)
    for key, value in dotted.items():
        parts = key.split(".")
        node = out
        for p in parts[:-1]:
            node = node[p]
        node[parts[-1]] = value
    validate_config(out)
    return out
