"""Hot numeric kernels behind the query strategies.

Each kernel exists twice: a plain-numpy implementation and, when numba is
importable, an ``@njit``-compiled twin with identical semantics.  The
backend is chosen per call, so setting the environment variable
``POOLBENCH_NO_NUMBA=1`` (any value other than ``0``/empty) forces the
numpy path even after import.  ``benchmarks/bench_kernels.py`` compares
the two paths.

Semantics shared by both backends:
  - distances are squared Euclidean in float64;
  - argmax ties resolve to the lowest index;
  - nearest-neighbour ties resolve to the lowest labeled row.

The two backends may differ in the last few ulps (BLAS vs sequential
accumulation); each backend on its own is deterministic.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_ENV = "POOLBENCH_NO_NUMBA"

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    njit = None
    NUMBA_AVAILABLE = False


def active_backend() -> str:
    """Backend selected for the next kernel call: "numba" or "numpy"."""
    flag = os.environ.get(_FORCE_ENV, "").strip()
    if flag not in ("", "0"):
        return "numpy"
    return "numba" if NUMBA_AVAILABLE else "numpy"


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def _np_min_sqdist_to_set(points, centers):
    # |x - c|^2 expanded through BLAS; clamp the cancellation error at 0.
    pn = np.einsum("ij,ij->i", points, points)
    cn = np.einsum("ij,ij->i", centers, centers)
    d2 = pn[:, None] + cn[None, :] - 2.0 * (points @ centers.T)
    np.maximum(d2, 0.0, out=d2)
    return d2.min(axis=1)


def _np_sqdist_to_point(points, center):
    diff = points - center[None, :]
    return np.einsum("ij,ij->i", diff, diff)


def _np_greedy_kcenter(points, init_d2, n_pick):
    d2 = init_d2.copy()
    picks = np.empty(n_pick, dtype=np.int64)
    for i in range(n_pick):
        best = int(np.argmax(d2))  # first max = lowest index on ties
        picks[i] = best
        step = _np_sqdist_to_point(points, points[best])
        np.minimum(d2, step, out=d2)
        d2[best] = -1.0  # exclude; real distances are >= 0
    return picks


def _np_min_sqdist_update(d2, points, center):
    return np.minimum(d2, _np_sqdist_to_point(points, center))


def _np_knn_mean_kl(cand_emb, lab_emb, cand_probs, lab_probs, k, eps):
    n = cand_emb.shape[0]
    m = lab_emb.shape[0]
    kp = min(k, m)
    log_lab = np.log(np.maximum(lab_probs, eps))
    scores = np.empty(n, dtype=np.float64)
    for i in range(n):
        d2 = _np_sqdist_to_point(lab_emb, cand_emb[i])
        nbr = np.argsort(d2, kind="stable")[:kp]
        log_cand = np.log(np.maximum(cand_probs[i], eps))
        kl = np.sum(lab_probs[nbr] * (log_lab[nbr] - log_cand[None, :]), axis=1)
        scores[i] = np.sum(kl) / kp
    return scores


# ---------------------------------------------------------------------------
# numba twins
# ---------------------------------------------------------------------------

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _nb_min_sqdist_to_set(points, centers):
        n, d = points.shape
        m = centers.shape[0]
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            best = np.inf
            for j in range(m):
                acc = 0.0
                for t in range(d):
                    diff = points[i, t] - centers[j, t]
                    acc += diff * diff
                if acc < best:
                    best = acc
            out[i] = best
        return out

    @njit(cache=True)
    def _nb_greedy_kcenter(points, init_d2, n_pick):
        n, d = points.shape
        d2 = init_d2.copy()
        picks = np.empty(n_pick, dtype=np.int64)
        for i in range(n_pick):
            best = 0
            best_val = d2[0]
            for j in range(1, n):
                if d2[j] > best_val:
                    best = j
                    best_val = d2[j]
            picks[i] = best
            for j in range(n):
                acc = 0.0
                for t in range(d):
                    diff = points[j, t] - points[best, t]
                    acc += diff * diff
                if acc < d2[j]:
                    d2[j] = acc
            d2[best] = -1.0
        return picks

    @njit(cache=True)
    def _nb_min_sqdist_update(d2, points, center):
        n, d = points.shape
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            acc = 0.0
            for t in range(d):
                diff = points[i, t] - center[t]
                acc += diff * diff
            out[i] = acc if acc < d2[i] else d2[i]
        return out

    @njit(cache=True)
    def _nb_knn_mean_kl(cand_emb, lab_emb, cand_probs, lab_probs, k, eps):
        n, d = cand_emb.shape
        m = lab_emb.shape[0]
        c = cand_probs.shape[1]
        kp = k if k < m else m
        scores = np.empty(n, dtype=np.float64)
        dist = np.empty(m, dtype=np.float64)
        used = np.empty(m, dtype=np.bool_)
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for t in range(d):
                    diff = lab_emb[j, t] - cand_emb[i, t]
                    acc += diff * diff
                dist[j] = acc
                used[j] = False
            total = 0.0
            for _ in range(kp):
                best = -1
                best_val = np.inf
                for j in range(m):
                    if not used[j] and dist[j] < best_val:
                        best = j
                        best_val = dist[j]
                used[best] = True
                kl = 0.0
                for t in range(c):
                    p = lab_probs[best, t]
                    pg = p if p > eps else eps
                    qg = cand_probs[i, t] if cand_probs[i, t] > eps else eps
                    kl += p * (np.log(pg) - np.log(qg))
                total += kl
            scores[i] = total / kp
        return scores


# ---------------------------------------------------------------------------
# dispatchers
# ---------------------------------------------------------------------------


def min_sqdist_to_set(points, centers) -> np.ndarray:
    """Min squared distance from each point to the nearest center."""
    points, centers = _f64(points), _f64(centers)
    if points.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if active_backend() == "numba":
        return _nb_min_sqdist_to_set(points, centers)
    return _np_min_sqdist_to_set(points, centers)


def greedy_kcenter(points, init_d2, n_pick: int) -> np.ndarray:
    """Greedy max-min facility selection.

    Starting from per-point distances ``init_d2`` to an implicit center
    set, repeatedly picks the point with the largest minimum distance
    (ties -> lowest index), promoting it to a center.  Returns the picked
    positions in selection order.
    """
    points, init_d2 = _f64(points), _f64(init_d2)
    if n_pick == 0:
        return np.empty(0, dtype=np.int64)
    if active_backend() == "numba":
        return _nb_greedy_kcenter(points, init_d2, n_pick)
    return _np_greedy_kcenter(points, init_d2, n_pick)


def min_sqdist_update(d2, points, center) -> np.ndarray:
    """Elementwise min of ``d2`` and squared distances to ``center``."""
    d2, points, center = _f64(d2), _f64(points), _f64(center)
    if active_backend() == "numba":
        return _nb_min_sqdist_update(d2, points, center)
    return _np_min_sqdist_update(d2, points, center)


def knn_mean_kl(cand_emb, lab_emb, cand_probs, lab_probs, k: int, eps: float) -> np.ndarray:
    """Mean KL(neighbour || candidate) over each candidate's k nearest
    labeled neighbours in embedding space."""
    cand_emb, lab_emb = _f64(cand_emb), _f64(lab_emb)
    cand_probs, lab_probs = _f64(cand_probs), _f64(lab_probs)
    if cand_emb.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if active_backend() == "numba":
        return _nb_knn_mean_kl(cand_emb, lab_emb, cand_probs, lab_probs, k, eps)
    return _np_knn_mean_kl(cand_emb, lab_emb, cand_probs, lab_probs, k, eps)
