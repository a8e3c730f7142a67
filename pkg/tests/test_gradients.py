import numpy as np
import pytest

from mobshift import _kernels
from mobshift import model as M

from helpers import gradient_check, tiny_batch, tiny_model


@pytest.mark.parametrize("sign", [-1.0, 1.0])
@pytest.mark.parametrize("flags", [{}, {"use_spatial": False}, {"use_temporal": False}])
def test_all_parameter_groups(sign, flags):
    mdl = tiny_model(entropy_sign=sign, **flags)
    trips = tiny_batch(lengths=(5, 3))
    eps = np.random.default_rng(1).standard_normal((2, 4))
    rel, grads = gradient_check(mdl, trips, eps, kl_weight=0.7)
    assert rel.max() < 1e-3
    # every group receives gradient except the input projection and output head of a gated-off block
    dead = set()
    if flags.get("use_spatial") is False:
        dead = {"Ws", "Wos", "bos"}
    if flags.get("use_temporal") is False:
        dead = {"Wt", "Wot", "bot"}
    for name, g in grads.items():
        assert (np.abs(g).max() > 0) == (name not in dead), name


def test_without_sampling():
    mdl = tiny_model(seed=8)
    rel, _ = gradient_check(mdl, tiny_batch(seed=2, lengths=(2, 4, 1)), None)
    assert rel.max() < 1e-3


@pytest.mark.parametrize("backward", [_kernels.gru_backward, _kernels.NUMPY_KERNELS["gru_backward"]])
def test_gru_kernel_backward(backward, rng):
    L, B, H = 4, 3, 5
    fwd = _kernels.NUMPY_KERNELS["gru_forward"]
    gx = rng.normal(size=(L, B, 3 * H))
    h0 = rng.normal(size=(B, H))
    wh = rng.normal(size=(H, 3 * H)) * 0.5
    bh = rng.normal(size=3 * H) * 0.1
    mask = np.ones((L, B))
    mask[2:, 0] = 0
    w_out = rng.normal(size=(L, B, H))
    w_last = rng.normal(size=(B, H))

    def f(gx, h0, wh, bh):
        hs = fwd(gx, h0, wh, bh, mask)[0]
        return float((hs[1:] * w_out).sum() + (hs[-1] * w_last).sum())

    hs, r, z, n, ghn = fwd(gx, h0, wh, bh, mask)
    dgx, dh0, dwh, dbh = backward(w_out, w_last, hs, r, z, n, ghn, wh, mask)
    args = [gx, h0, wh, bh]
    for k, analytic in enumerate((dgx, dh0, dwh, dbh)):
        arr = args[k]
        for i in range(arr.size):
            old = arr.flat[i]
            arr.flat[i] = old + 1e-6
            lp = f(*args)
            arr.flat[i] = old - 1e-6
            lm = f(*args)
            arr.flat[i] = old
            assert analytic.flat[i] == pytest.approx((lp - lm) / 2e-6, rel=1e-5, abs=1e-7)
