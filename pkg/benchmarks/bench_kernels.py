"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first numba call (compilation, or loading from the on-disk cache) is
excluded; each row reports the best of ``--repeat`` runs.
"""
import argparse
import time

import numpy as np

from streamfill import _accel
from streamfill.kernels.cd import cd_gram_numba, cd_gram_numpy
from streamfill.kernels.knn import knn_rows_numba, knn_rows_numpy
from streamfill.kernels.tree import (
    grow_tree_numba,
    grow_tree_numpy,
    node_capacity,
    predict_tree_numba,
    predict_tree_numpy,
)


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    X = rng.standard_normal((2000, 10))
    y = X @ rng.standard_normal(10) + rng.standard_normal(2000)
    G, c, yy = X.T @ X / 2000, X.T @ y / 2000, float(y @ y / 2000)
    cd_args = (G, c, yy, 0.01, 0.5, 1e-10, 10_000)

    Xt = rng.random((3000, 9))
    yt = np.sin(5 * Xt[:, 0]) + Xt[:, 1] + 0.1 * rng.standard_normal(3000)
    keys = rng.random((node_capacity(3000, 5), 9))
    tree_args = (Xt, yt, 12, 5, 3, keys)
    tree = grow_tree_numpy(*tree_args)
    pred_args = (*tree, rng.random((20_000, 9)))

    ref = rng.standard_normal((3000, 10))
    q = rng.standard_normal((1000, 10))
    q[rng.random(q.shape) < 0.2] = np.nan
    knn_args = (ref, q, 5)
    return [
        ("cd_gram (p=10)", cd_gram_numba, cd_gram_numpy, cd_args),
        ("grow_tree (n=3000)", grow_tree_numba, grow_tree_numpy, tree_args),
        ("predict_tree (m=20000)", predict_tree_numba, predict_tree_numpy, pred_args),
        ("knn_rows (3000 x 1000)", knn_rows_numba, knn_rows_numpy, knn_args),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.HAS_NUMBA:
        print("numba is not installed; only the numpy path can run")
        return
    print(f"{'kernel':<26}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for name, fast, slow, fargs in cases(np.random.default_rng(0)):
        fast(*fargs)  # compile / load cache
        tf = best_of(fast, fargs, args.repeat)
        ts = best_of(slow, fargs, args.repeat)
        print(f"{name:<26}{tf:>12.4f}{ts:>12.4f}{ts / tf:>9.1f}x")


if __name__ == "__main__":
    main()
