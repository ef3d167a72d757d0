"""Labeled/unlabeled pool state and its update rules.

The pool is a disjoint partition of the train indices.  All transitions
are value-semantic: every operation returns a fresh state and never
mutates its inputs, so independent runs can share nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyPoolError, InvalidConfigError, PoolConsistencyError


@dataclass(frozen=True, eq=False)
class PoolState:
    """Disjoint labeled/unlabeled index partition at cycle ``cycle``.

    Both index arrays are kept sorted so that every derived quantity
    (candidate order, tie-breaking, persisted records) is canonical.
    """

    labeled: np.ndarray  # sorted int64
    unlabeled: np.ndarray  # sorted int64
    cycle: int

    @property
    def n_total(self) -> int:
        return self.labeled.size + self.unlabeled.size


@dataclass(frozen=True, eq=False)
class QueryBatch:
    """Distinct train indices selected by a strategy at one cycle."""

    indices: np.ndarray  # int64, in selection order
    cycle: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if np.unique(idx).size != idx.size:
            raise PoolConsistencyError("query batch contains duplicate indices")
        object.__setattr__(self, "indices", idx)


@dataclass(frozen=True, eq=False)
class AnnotatedBatch:
    """A query batch paired with its oracle labels."""

    indices: np.ndarray
    labels: np.ndarray


def init_pools(n_train: int, init_size: int, rng: np.random.Generator) -> PoolState:
    """Draw the initial labeled pool uniformly without replacement."""
    if n_train < 0:
        raise InvalidConfigError(f"n_train must be >= 0, got {n_train}")
    if not 0 <= init_size <= n_train:
        raise InvalidConfigError(
            f"init_size must be in [0, {n_train}], got {init_size}"
        )
    chosen = rng.permutation(n_train)[:init_size]
    labeled = np.sort(chosen).astype(np.int64)
    unlabeled = np.setdiff1d(np.arange(n_train, dtype=np.int64), labeled)
    return PoolState(labeled=labeled, unlabeled=unlabeled, cycle=0)


def draw_subset(state: PoolState, subset_size: int, rng: np.random.Generator) -> np.ndarray:
    """Sample a candidate subset of the unlabeled pool for one cycle.

    Returns min(subset_size, |unlabeled|) distinct unlabeled indices in
    sorted order; when the requested size covers the pool this is exactly
    the full unlabeled pool.
    """
    if subset_size < 1:
        raise InvalidConfigError(f"subset_size must be >= 1, got {subset_size}")
    if state.unlabeled.size == 0:
        raise EmptyPoolError("cannot draw a subset from an empty unlabeled pool")
    k = min(subset_size, state.unlabeled.size)
    if k == state.unlabeled.size:
        return state.unlabeled.copy()
    picks = rng.permutation(state.unlabeled.size)[:k]
    return np.sort(state.unlabeled[picks])


def annotate(batch: QueryBatch, oracle_labels: np.ndarray) -> AnnotatedBatch:
    """Look up ground-truth labels for a query batch (simulated oracle)."""
    oracle_labels = np.asarray(oracle_labels)
    if batch.indices.size and (
        batch.indices.min() < 0 or batch.indices.max() >= oracle_labels.shape[0]
    ):
        raise IndexError(
            f"batch indices outside label range [0, {oracle_labels.shape[0]})"
        )
    labels = oracle_labels[batch.indices].astype(np.int64)
    return AnnotatedBatch(indices=batch.indices.copy(), labels=labels)


def update_pools(state: PoolState, batch: AnnotatedBatch) -> PoolState:
    """Move an annotated batch from the unlabeled to the labeled pool."""
    idx = np.asarray(batch.indices, dtype=np.int64)
    if np.unique(idx).size != idx.size:
        raise PoolConsistencyError("annotated batch contains duplicate indices")
    member = np.isin(idx, state.unlabeled, assume_unique=True)
    if not member.all():
        bad = idx[~member]
        raise PoolConsistencyError(
            f"batch indices not in the unlabeled pool: {bad.tolist()}"
        )
    labeled = np.sort(np.concatenate([state.labeled, idx]))
    unlabeled = np.setdiff1d(state.unlabeled, idx, assume_unique=True)
    return PoolState(labeled=labeled, unlabeled=unlabeled, cycle=state.cycle + 1)
