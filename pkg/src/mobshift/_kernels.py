"""Hot numeric kernels.

Every kernel has two implementations with identical signatures: a loop-style
version compiled with ``numba.njit`` and a pure-numpy version.  The numba path
is the default; set ``MOBSHIFT_DISABLE_NUMBA=1`` to force the numpy path (also
used automatically when numba is not importable).  Results agree to floating
point round-off between the two paths, and each path is deterministic.
"""
from __future__ import annotations

import math
import os

import numpy as np

EARTH_RADIUS_M = 6_371_008.8

_DISABLED = os.environ.get("MOBSHIFT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by MOBSHIFT_DISABLE_NUMBA")
    from numba import njit

    USE_NUMBA = True
except ImportError:
    USE_NUMBA = False


# --------------------------------------------------------------------------
# great-circle buffer counts
# --------------------------------------------------------------------------

def _buffer_counts_numpy(sp_lat, sp_lon, cell_lat, cell_lon, cell_counts, radii):
    n = sp_lat.shape[0]
    out = np.zeros((n, radii.shape[0], cell_counts.shape[1]), dtype=np.float64)
    if n == 0 or cell_lat.shape[0] == 0:
        return out
    lat2 = np.radians(cell_lat)[None, :]
    lon2 = np.radians(cell_lon)[None, :]
    cos_lat2 = np.cos(lat2)
    chunk = max(1, 2_000_000 // max(1, cell_lat.shape[0]))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        lat1 = np.radians(sp_lat[lo:hi])[:, None]
        lon1 = np.radians(sp_lon[lo:hi])[:, None]
        a = np.sin((lat2 - lat1) * 0.5) ** 2 + np.cos(lat1) * cos_lat2 * np.sin((lon2 - lon1) * 0.5) ** 2
        d = 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.minimum(a, 1.0)))
        for r, radius in enumerate(radii):
            out[lo:hi, r, :] = (d <= radius).astype(np.float64) @ cell_counts
    return out


def _buffer_counts_loop(sp_lat, sp_lon, cell_lat, cell_lon, cell_counts, radii):
    n = sp_lat.shape[0]
    m = cell_lat.shape[0]
    n_r = radii.shape[0]
    n_c = cell_counts.shape[1]
    out = np.zeros((n, n_r, n_c), dtype=np.float64)
    if m == 0:
        return out
    max_r = radii[n_r - 1]
    # latitude prefilter: one degree of latitude is ~111.2 km everywhere
    lat_slack = math.degrees(max_r / EARTH_RADIUS_M) * 1.0001 + 1e-9
    lat2 = np.empty(m)
    lon2 = np.empty(m)
    cos2 = np.empty(m)
    for j in range(m):
        lat2[j] = math.radians(cell_lat[j])
        lon2[j] = math.radians(cell_lon[j])
        cos2[j] = math.cos(lat2[j])
    for i in range(n):
        la1 = math.radians(sp_lat[i])
        lo1 = math.radians(sp_lon[i])
        c1 = math.cos(la1)
        for j in range(m):
            if abs(cell_lat[j] - sp_lat[i]) > lat_slack:
                continue
            s1 = math.sin((lat2[j] - la1) * 0.5)
            s2 = math.sin((lon2[j] - lo1) * 0.5)
            a = s1 * s1 + c1 * cos2[j] * s2 * s2
            if a > 1.0:
                a = 1.0
            d = 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(a))
            for r in range(n_r):
                if d <= radii[r]:
                    for c in range(n_c):
                        out[i, r, c] += cell_counts[j, c]
    return out


# --------------------------------------------------------------------------
# gap-scan segmentation
# --------------------------------------------------------------------------

def _segment_scan_python(t_start, t_end, gap_threshold):
    n = t_start.shape[0]
    seg = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return seg
    current = 0
    last = 0
    seg[0] = 0
    for i in range(1, n):
        gap = t_start[i] - t_end[last]
        if gap < 0:
            continue  # overlaps the last kept staypoint: dropped
        if gap > gap_threshold:
            current += 1
        seg[i] = current
        last = i
    return seg


# --------------------------------------------------------------------------
# GRU sequence kernels (time-major, masked)
# --------------------------------------------------------------------------

def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def _gru_forward_numpy(gx, h0, wh, bh, mask):
    steps, batch, three_h = gx.shape
    hd = three_h // 3
    hs = np.empty((steps + 1, batch, hd))
    r_all = np.empty((steps, batch, hd))
    z_all = np.empty((steps, batch, hd))
    n_all = np.empty((steps, batch, hd))
    ghn_all = np.empty((steps, batch, hd))
    hs[0] = h0
    for t in range(steps):
        h = hs[t]
        gh = h @ wh + bh
        r = _sigmoid(gx[t, :, :hd] + gh[:, :hd])
        z = _sigmoid(gx[t, :, hd:2 * hd] + gh[:, hd:2 * hd])
        ghn = gh[:, 2 * hd:]
        n = np.tanh(gx[t, :, 2 * hd:] + r * ghn)
        hc = (1.0 - z) * n + z * h
        m = mask[t][:, None]
        hs[t + 1] = m * hc + (1.0 - m) * h
        r_all[t], z_all[t], n_all[t], ghn_all[t] = r, z, n, ghn
    return hs, r_all, z_all, n_all, ghn_all


def _gru_backward_numpy(dh_out, dh_last, hs, r_all, z_all, n_all, ghn_all, wh, mask):
    steps, batch, hd = dh_out.shape
    dgx = np.empty((steps, batch, 3 * hd))
    dwh = np.zeros_like(wh)
    dbh = np.zeros(3 * hd)
    dh = dh_last.copy()
    for t in range(steps - 1, -1, -1):
        dh = dh + dh_out[t]
        h = hs[t]
        r, z, n, ghn = r_all[t], z_all[t], n_all[t], ghn_all[t]
        m = mask[t][:, None]
        dhc = m * dh
        dh_prev = (1.0 - m) * dh + z * dhc
        dn = dhc * (1.0 - z)
        dz = dhc * (h - n)
        da_n = dn * (1.0 - n * n)
        da_r = da_n * ghn * r * (1.0 - r)
        da_z = dz * z * (1.0 - z)
        dgh = np.concatenate([da_r, da_z, da_n * r], axis=1)
        dgx[t] = np.concatenate([da_r, da_z, da_n], axis=1)
        dwh += h.T @ dgh
        dbh += dgh.sum(axis=0)
        dh = dh_prev + dgh @ wh.T
    return dgx, dh, dwh, dbh


def _gru_forward_loop(gx, h0, wh, bh, mask):
    steps, batch, three_h = gx.shape
    hd = three_h // 3
    hs = np.empty((steps + 1, batch, hd))
    r_all = np.empty((steps, batch, hd))
    z_all = np.empty((steps, batch, hd))
    n_all = np.empty((steps, batch, hd))
    ghn_all = np.empty((steps, batch, hd))
    hs[0] = h0
    for t in range(steps):
        h = np.ascontiguousarray(hs[t])
        gh = np.dot(h, wh)
        for b in range(batch):
            m = mask[t, b]
            for k in range(hd):
                r = 0.5 * (math.tanh(0.5 * (gx[t, b, k] + gh[b, k] + bh[k])) + 1.0)
                z = 0.5 * (math.tanh(0.5 * (gx[t, b, hd + k] + gh[b, hd + k] + bh[hd + k])) + 1.0)
                ghn = gh[b, 2 * hd + k] + bh[2 * hd + k]
                n = math.tanh(gx[t, b, 2 * hd + k] + r * ghn)
                hc = (1.0 - z) * n + z * h[b, k]
                hs[t + 1, b, k] = m * hc + (1.0 - m) * h[b, k]
                r_all[t, b, k] = r
                z_all[t, b, k] = z
                n_all[t, b, k] = n
                ghn_all[t, b, k] = ghn
    return hs, r_all, z_all, n_all, ghn_all


def _gru_backward_loop(dh_out, dh_last, hs, r_all, z_all, n_all, ghn_all, wh, mask):
    steps, batch, hd = dh_out.shape
    dgx = np.empty((steps, batch, 3 * hd))
    dwh = np.zeros_like(wh)
    dbh = np.zeros(3 * hd)
    dh = dh_last.copy()
    dgh = np.empty((batch, 3 * hd))
    wh_t = np.ascontiguousarray(wh.T)
    for t in range(steps - 1, -1, -1):
        dh_prev = np.empty((batch, hd))
        for b in range(batch):
            m = mask[t, b]
            for k in range(hd):
                g = dh[b, k] + dh_out[t, b, k]
                r = r_all[t, b, k]
                z = z_all[t, b, k]
                n = n_all[t, b, k]
                dhc = m * g
                dh_prev[b, k] = (1.0 - m) * g + z * dhc
                da_n = dhc * (1.0 - z) * (1.0 - n * n)
                da_r = da_n * ghn_all[t, b, k] * r * (1.0 - r)
                da_z = dhc * (hs[t, b, k] - n) * z * (1.0 - z)
                dgh[b, k] = da_r
                dgh[b, hd + k] = da_z
                dgh[b, 2 * hd + k] = da_n * r
                dgx[t, b, k] = da_r
                dgx[t, b, hd + k] = da_z
                dgx[t, b, 2 * hd + k] = da_n
        h_t = np.ascontiguousarray(hs[t].T)
        dwh += np.dot(h_t, dgh)
        for j in range(3 * hd):
            acc = 0.0
            for b in range(batch):
                acc += dgh[b, j]
            dbh[j] += acc
        dh = dh_prev + np.dot(dgh, wh_t)
    return dgx, dh, dwh, dbh


if USE_NUMBA:
    buffer_counts_kernel = njit(cache=True)(_buffer_counts_loop)
    segment_scan = njit(cache=True)(_segment_scan_python)
    gru_forward = njit(cache=True)(_gru_forward_loop)
    gru_backward = njit(cache=True)(_gru_backward_loop)
else:
    buffer_counts_kernel = _buffer_counts_numpy
    segment_scan = _segment_scan_python
    gru_forward = _gru_forward_numpy
    gru_backward = _gru_backward_numpy

# both paths stay importable for benchmarks and cross-checks
NUMPY_KERNELS = {
    "buffer_counts": _buffer_counts_numpy,
    "segment_scan": _segment_scan_python,
    "gru_forward": _gru_forward_numpy,
    "gru_backward": _gru_backward_numpy,
}
