"""The numba and numpy paths of every hot kernel agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from mobshift import _kernels

NP = _kernels.NUMPY_KERNELS
needs_numba = pytest.mark.skipif(not _kernels.USE_NUMBA, reason="numba path disabled")


@needs_numba
def test_buffer_counts_paths_agree(rng):
    sp_lat = 34.0 + rng.normal(0, 0.02, 200)
    sp_lon = -118.0 + rng.normal(0, 0.02, 200)
    c_lat = 34.0 + rng.normal(0, 0.03, 500)
    c_lon = -118.0 + rng.normal(0, 0.03, 500)
    counts = rng.integers(0, 4, (500, 13)).astype(np.float64)
    radii = np.array([500.0, 1000.0, 2000.0])
    a = _kernels.buffer_counts_kernel(sp_lat, sp_lon, c_lat, c_lon, counts, radii)
    b = NP["buffer_counts"](sp_lat, sp_lon, c_lat, c_lon, counts, radii)
    assert a.shape == (200, 3, 13) and np.array_equal(a, b)


@needs_numba
def test_segment_scan_paths_agree(rng):
    starts = np.cumsum(rng.uniform(0, 3000, 300))
    ends = starts + rng.uniform(0, 2500, 300)
    assert np.array_equal(_kernels.segment_scan(starts, ends, 1800.0), NP["segment_scan"](starts, ends, 1800.0))


@needs_numba
def test_gru_paths_agree(rng):
    L, B, H = 7, 5, 6
    gx = rng.normal(size=(L, B, 3 * H))
    h0 = rng.normal(size=(B, H))
    wh = rng.normal(size=(H, 3 * H))
    bh = rng.normal(size=3 * H)
    mask = (rng.random((L, B)) < 0.8).astype(float)
    fa = _kernels.gru_forward(gx, h0, wh, bh, mask)
    fb = NP["gru_forward"](gx, h0, wh, bh, mask)
    for x, y in zip(fa, fb):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-13)
    dh_out = rng.normal(size=(L, B, H))
    dh_last = rng.normal(size=(B, H))
    ba = _kernels.gru_backward(dh_out, dh_last, *fb, wh, mask)
    bb = NP["gru_backward"](dh_out, dh_last, *fb, wh, mask)
    for x, y in zip(ba, bb):
        assert np.allclose(x, y, rtol=1e-11, atol=1e-12)


def test_env_flag_selects_numpy_path():
    env = dict(os.environ, MOBSHIFT_DISABLE_NUMBA="1")
    code = ("from mobshift import _kernels as k; "
            "print(k.USE_NUMBA, k.gru_forward is k.NUMPY_KERNELS['gru_forward'])")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]
