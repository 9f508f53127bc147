"""Time each hot kernel on its numba and numpy paths.

    python benchmarks/bench_kernels.py [--rows 2000] [--repeat 5]

The numba column is empty when numba is unavailable or disabled through
PERMFORGE_NO_NUMBA=1.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from permforge import _accel, kernels
from permforge.catalog import default_catalog
from permforge.classifiers import RandomForestConfig, fit
from permforge.dataset import default_synthetic


def _median_time(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cases(rows: int):
    m = default_synthetic(default_catalog(), rows // 2, seed=0)
    X = np.ascontiguousarray(m.values)
    y = m.labels
    w = np.ones(len(y))
    idx = np.arange(len(y), dtype=np.int64)
    order = np.arange(X.shape[1], dtype=np.int64)
    tree = fit(RandomForestConfig(n_trees=1), m, seed=0).trees[0]
    ypm = np.where(y == 1, 1.0, -1.0)
    perm = np.random.default_rng(0).permutation(len(y)).astype(np.int64)
    q = X[: min(500, len(X))]

    def svm(flag):
        wv = np.zeros(X.shape[1])
        sums = np.zeros((2, X.shape[1] + 1))
        kernels.svm_epoch(X, ypm, perm, wv, 0.0, sums, 0, len(y) // 2, 0.1, 1e-4, use_numba=flag)

    return {
        "best_split (root, all features)": lambda f: kernels.best_split(X, y, w, idx, order, X.shape[1], 5, use_numba=f),
        "tree_apply": lambda f: kernels.tree_apply(tree.feature, tree.threshold, tree.left, tree.right, X, use_numba=f),
        f"knn_scores ({len(q)} queries)": lambda f: kernels.knn_scores(X, y, q, 5, use_numba=f),
        "svm_epoch": svm,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    use_numba = _accel.USE_NUMBA
    print(f"backend={_accel.backend()} rows={args.rows} repeat={args.repeat}")
    print(f"{'kernel':<34} {'numba (ms)':>11} {'numpy (ms)':>11} {'speedup':>8}")
    for name, fn in cases(args.rows).items():
        t_np = _median_time(lambda: fn(False), args.repeat)
        if use_numba:
            t_nb = _median_time(lambda: fn(True), args.repeat)
            print(f"{name:<34} {t_nb * 1e3:11.3f} {t_np * 1e3:11.3f} {t_np / t_nb:7.1f}x")
        else:
            print(f"{name:<34} {'-':>11} {t_np * 1e3:11.3f} {'-':>8}")


if __name__ == "__main__":
    main()
