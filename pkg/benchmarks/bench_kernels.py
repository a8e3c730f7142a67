"""Time the compiled and pure-numpy paths of each hot kernel.

    python3 benchmarks/bench_kernels.py [--repeat N]

With MOBSHIFT_DISABLE_NUMBA=1 only the numpy column is reported.
"""
import argparse
import timeit

import numpy as np

from mobshift import _kernels

NP = _kernels.NUMPY_KERNELS


def cases(rng):
    n_sp, n_cells = 2000, 4000
    buf = (34.0 + rng.normal(0, 0.05, n_sp), -118.0 + rng.normal(0, 0.05, n_sp),
           34.0 + rng.normal(0, 0.06, n_cells), -118.0 + rng.normal(0, 0.06, n_cells),
           rng.integers(0, 3, (n_cells, 13)).astype(np.float64), np.array([500.0, 1000.0, 2000.0]))
    starts = np.cumsum(rng.uniform(0, 3000, 200_000))
    seg = (starts, starts + rng.uniform(0, 2500, starts.size), 1800.0)
    L, B, H = 12, 64, 64
    mask = np.ones((L, B))
    wh = rng.normal(0, 0.1, (H, 3 * H))
    fwd = (rng.normal(size=(L, B, 3 * H)), np.zeros((B, H)), wh, np.zeros(3 * H), mask)
    cache = NP["gru_forward"](*fwd)
    bwd = (rng.normal(size=(L, B, H)), rng.normal(size=(B, H)), *cache, wh, mask)
    return {
        "buffer_counts": (buf, "buffer_counts_kernel"),
        "segment_scan": (seg, "segment_scan"),
        "gru_forward": (fwd, "gru_forward"),
        "gru_backward": (bwd, "gru_backward"),
    }


def best_ms(fn, args, repeat):
    return 1000 * min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"numba enabled: {_kernels.USE_NUMBA}")
    print(f"{'kernel':<15}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, (inputs, attr) in cases(rng).items():
        t_np = best_ms(NP[name], inputs, args.repeat)
        if _kernels.USE_NUMBA:
            fn = getattr(_kernels, attr)
            fn(*inputs)  # compile outside the timed region
            t_nb = best_ms(fn, inputs, args.repeat)
            print(f"{name:<15}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<15}{t_np:>12.2f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
