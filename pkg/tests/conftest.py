import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from mobshift import pipeline

# upstream artifacts an ablation run can reuse unchanged
UPSTREAM = ["synth", "trips.csv", "rejections.csv", "spatial_index.txt", "index_skips.txt", "features.npz",
            "manifest.json"]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion implemented by the test")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and (rep.failed or rep.skipped)):
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        item.config._criteria[item.nodeid] = (mark.args[0], mark.args[1], status, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = sorted(config._criteria.values(), key=lambda r: r[0])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, status, detail in rows:
        line = f"criterion {n} {status}: {title}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))


def run_all(out_dir: Path, cfg: dict) -> tuple[dict, float]:
    t0 = time.perf_counter()
    pipeline.run_stage("synth", out_dir, cfg)
    metrics = pipeline.run_stage("all", out_dir, cfg)
    return metrics, time.perf_counter() - t0


def run_downstream(src: Path, out_dir: Path, cfg: dict) -> dict:
    """Train/profile/score/evaluate in ``out_dir`` reusing ``src``'s upstream artifacts."""
    out_dir.mkdir(parents=True)
    for name in UPSTREAM:
        p = src / name
        if p.is_dir():
            shutil.copytree(p, out_dir / name)
        else:
            shutil.copy2(p, out_dir / name)
    result = None
    for stage in ("train", "profile", "score", "evaluate"):
        result = pipeline.run_stage(stage, out_dir, cfg)
    return result


@pytest.fixture(scope="session")
def default_cfg():
    return pipeline.load_config(None, [])


@pytest.fixture(scope="session")
def e2e_run(tmp_path_factory, default_cfg):
    """Default synthetic run (n=500, rate 0.05, seed 7) through every stage."""
    out = tmp_path_factory.mktemp("e2e") / "run"
    metrics, elapsed = run_all(out, default_cfg)
    return out, metrics, elapsed


@pytest.fixture(scope="session")
def ablation_runs(tmp_path_factory, e2e_run, default_cfg):
    src = e2e_run[0]
    base = tmp_path_factory.mktemp("ablation")
    out = {}
    for name, flags in (("temporal_only", {"features.use_spatial": False}),
                        ("spatial_only", {"features.use_temporal": False})):
        cfg = pipeline.with_overrides(default_cfg, **flags)
        out[name] = (base / name, run_downstream(src, base / name, cfg))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
