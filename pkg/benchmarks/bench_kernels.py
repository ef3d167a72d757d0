"""Benchmark the numba kernels against their pure-numpy fallbacks.

Runs the three query-strategy hot paths (greedy k-center selection,
k-NN mean-KL scoring, k-means++ distance updates) on realistically sized
inputs under both backends and reports wall-clock times plus the largest
numerical deviation between the paths.

Usage:
    python benchmarks/bench_kernels.py [--quick]
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np


def _with_backend(flag: str, fn, *args):
    os.environ["POOLBENCH_NO_NUMBA"] = flag
    return fn(*args)


def _time(fn, *args, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args()

    from poolbench import _kernels
    from poolbench.strategies import kmeanspp_select
    from poolbench.rng import substream

    if not _kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")

    scale = 0.2 if args.quick else 1.0
    n_cand = int(10_000 * scale)
    n_lab = int(1_500 * scale)
    d = 64
    c = 10
    b = int(100 * scale) or 10
    rng = np.random.default_rng(0)
    cand = rng.normal(size=(n_cand, d))
    lab = rng.normal(size=(n_lab, d))
    cand_p = rng.random((n_cand, c)) + 1e-3
    cand_p /= cand_p.sum(1, keepdims=True)
    lab_p = rng.random((n_lab, c)) + 1e-3
    lab_p /= lab_p.sum(1, keepdims=True)
    grads = rng.normal(size=(n_cand, c * 16))

    print(f"candidates={n_cand} labeled={n_lab} d={d} c={c} b={b}")
    print(f"{'kernel':<28}{'numpy':>10}{'numba':>10}{'speedup':>9}{'max |diff|':>12}")

    def coreset(_):
        init = _kernels.min_sqdist_to_set(cand, lab)
        return _kernels.greedy_kcenter(cand, init, b)

    def cal(_):
        return _kernels.knn_mean_kl(cand, lab, cand_p, lab_p, 10, 1e-12)

    def badge(_):
        return kmeanspp_select(grads, b, substream(0, 0, "strategy"))

    # trigger JIT compilation outside the timed region
    _with_backend("0", coreset, None)
    _with_backend("0", cal, None)
    _with_backend("0", badge, None)

    for name, fn in (("coreset greedy k-center", coreset), ("cal knn mean-KL", cal), ("badge kmeans++ seeding", badge)):
        t_np, r_np = _time(lambda: _with_backend("1", fn, None))
        t_nb, r_nb = _time(lambda: _with_backend("0", fn, None))
        diff = float(np.max(np.abs(np.asarray(r_np, dtype=np.float64) - np.asarray(r_nb, dtype=np.float64))))
        print(f"{name:<28}{t_np:>9.3f}s{t_nb:>9.3f}s{t_np / t_nb:>8.1f}x{diff:>12.2e}")

    os.environ.pop("POOLBENCH_NO_NUMBA", None)


if __name__ == "__main__":
    main()
