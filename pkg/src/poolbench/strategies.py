"""Query strategies: random, entropy, coreset, badge, cal.

Every strategy maps model outputs on a candidate pool to a batch of ``b``
distinct candidates.  Score-based strategies (entropy, cal) take the top
``b`` scores with ties broken toward the lowest candidate position;
coreset is a greedy k-center sweep seeded at the labeled pool; badge runs
k-means++ seeding over gradient embeddings.  Entropy, coreset and cal are
seed-free; random and badge are deterministic given their generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    InsufficientCandidatesError,
    InvalidConfigError,
    MissingStrategyInputError,
    NeedsWarmStartError,
)
from .pools import QueryBatch

LOG_EPS = 1e-12

STRATEGY_NAMES = ("random", "entropy", "coreset", "badge", "cal")


@dataclass(frozen=True)
class StrategyKind:
    """A strategy name plus its per-kind options."""

    name: str
    cal_neighbors: int = 10

    def __post_init__(self):
        if self.name not in STRATEGY_NAMES:
            raise InvalidConfigError(
                f"unknown strategy {self.name!r}; expected one of {STRATEGY_NAMES}"
            )
        if self.cal_neighbors < 1:
            raise InvalidConfigError("cal_neighbors must be >= 1")

    @property
    def needs_seed(self) -> bool:
        return self.name in ("random", "badge")

    @property
    def needs_labeled_pool(self) -> bool:
        return self.name in ("coreset", "cal")


@dataclass(frozen=True, eq=False)
class StrategyInput:
    """Per-cycle model outputs a strategy may consume.

    Candidate-aligned fields share the candidate row count; labeled-aligned
    fields share the labeled row count.  Only the fields the selected
    strategy needs have to be present.
    """

    candidate_indices: np.ndarray
    candidate_probs: np.ndarray | None = None
    candidate_embeddings: np.ndarray | None = None
    labeled_embeddings: np.ndarray | None = None
    labeled_probs: np.ndarray | None = None
    grad_embeddings: np.ndarray | None = None

    def __post_init__(self):
        n = np.asarray(self.candidate_indices).shape[0]
        for field in ("candidate_probs", "candidate_embeddings", "grad_embeddings"):
            arr = getattr(self, field)
            if arr is not None and arr.shape[0] != n:
                raise InvalidConfigError(
                    f"{field} has {arr.shape[0]} rows, expected {n} candidates"
                )
        le, lp = self.labeled_embeddings, self.labeled_probs
        if le is not None and lp is not None and le.shape[0] != lp.shape[0]:
            raise InvalidConfigError(
                "labeled_embeddings and labeled_probs row counts disagree"
            )

    @property
    def n_candidates(self) -> int:
        return np.asarray(self.candidate_indices).shape[0]


def _check_budget(inp: StrategyInput, b: int) -> None:
    if b < 0:
        raise InvalidConfigError(f"batch size must be >= 0, got {b}")
    if b > inp.n_candidates:
        raise InsufficientCandidatesError(
            f"requested {b} instances from {inp.n_candidates} candidates"
        )


def _top_b(scores: np.ndarray, b: int) -> np.ndarray:
    # Sort by descending score, ties by ascending position.
    order = np.lexsort((np.arange(scores.size), -scores))
    return order[:b]


def _batch(inp: StrategyInput, positions: np.ndarray, cycle: int) -> QueryBatch:
    idx = np.asarray(inp.candidate_indices, dtype=np.int64)[positions]
    return QueryBatch(indices=idx, cycle=cycle)


# ---------------------------------------------------------------------------
# scores
# ---------------------------------------------------------------------------


def entropy_scores(probs: np.ndarray) -> np.ndarray:
    """Shannon entropy in nats of each probability row."""
    p = np.asarray(probs, dtype=np.float64)
    return -np.sum(p * np.log(np.maximum(p, LOG_EPS)), axis=1)


# ---------------------------------------------------------------------------
# selection
# ---------------------------------------------------------------------------


def query_entropy(inp: StrategyInput, b: int, cycle: int = 0) -> QueryBatch:
    """Top-b candidates by predictive entropy."""
    _check_budget(inp, b)
    if inp.candidate_probs is None:
        raise MissingStrategyInputError("entropy requires candidate_probs")
    scores = entropy_scores(inp.candidate_probs)
    return _batch(inp, _top_b(scores, b), cycle)


def query_coreset(inp: StrategyInput, b: int, cycle: int = 0) -> QueryBatch:
    """Greedy k-center selection seeded at the labeled embeddings.

    Each pick maximizes the minimum Euclidean distance to the current
    center set (labeled pool plus previous picks).
    """
    _check_budget(inp, b)
    if inp.candidate_embeddings is None:
        raise MissingStrategyInputError("coreset requires candidate_embeddings")
    if inp.labeled_embeddings is None or inp.labeled_embeddings.shape[0] == 0:
        raise NeedsWarmStartError("coreset requires a non-empty labeled pool")
    if b == 0:
        return _batch(inp, np.empty(0, dtype=np.int64), cycle)
    init_d2 = _kernels.min_sqdist_to_set(inp.candidate_embeddings, inp.labeled_embeddings)
    picks = _kernels.greedy_kcenter(inp.candidate_embeddings, init_d2, b)
    return _batch(inp, picks, cycle)


def kmeanspp_select(points: np.ndarray, b: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding over ``points`` with the origin as implicit center.

    The first pick is proportional to the squared norm (distance from the
    zero vector); every later pick is proportional to the squared distance
    to the nearest already-chosen point (still floored by the origin, so a
    zero point is never drawn while positive-mass points remain).  Falls
    back to a uniform draw over the remainder when all masses vanish.
    Returns ``b`` distinct positions in selection order; no Lloyd steps.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    if b > n:
        raise InsufficientCandidatesError(f"requested {b} of {n} points")
    d2 = np.einsum("ij,ij->i", pts, pts)
    active = np.ones(n, dtype=bool)
    picks = np.empty(b, dtype=np.int64)
    for i in range(b):
        mass = np.where(active, d2, 0.0)
        total = mass.sum()
        if total <= 0.0:
            remaining = np.flatnonzero(active)
            pick = int(remaining[rng.integers(remaining.size)])
        else:
            cum = np.cumsum(mass)
            r = rng.random() * total
            pick = int(np.searchsorted(cum, r, side="right"))
            if pick >= n or not active[pick]:
                # fp edge: r rounded onto the total; take the last live point
                pick = int(np.flatnonzero(active & (mass > 0.0))[-1])
        picks[i] = pick
        active[pick] = False
        d2 = _kernels.min_sqdist_update(d2, pts, pts[pick])
    return picks


def query_badge(
    inp: StrategyInput, b: int, rng: np.random.Generator, cycle: int = 0
) -> QueryBatch:
    """k-means++ seeding over the candidates' gradient embeddings."""
    # TODO: exploit the Kronecker structure of the gradient embeddings to
    # avoid materializing (C * (D + 1))-wide rows for very wide heads.
    _check_budget(inp, b)
    if inp.grad_embeddings is None:
        raise MissingStrategyInputError("badge requires grad_embeddings")
    picks = kmeanspp_select(inp.grad_embeddings, b, rng)
    return _batch(inp, picks, cycle)


def query_cal(inp: StrategyInput, b: int, k: int, cycle: int = 0) -> QueryBatch:
    """Contrastive selection: top-b candidates by mean KL divergence from
    their k nearest labeled neighbours' predicted distributions."""
    _check_budget(inp, b)
    if k < 1:
        raise InvalidConfigError(f"cal neighbourhood size must be >= 1, got {k}")
    for field in ("candidate_probs", "candidate_embeddings"):
        if getattr(inp, field) is None:
            raise MissingStrategyInputError(f"cal requires {field}")
    if (
        inp.labeled_embeddings is None
        or inp.labeled_probs is None
        or inp.labeled_embeddings.shape[0] == 0
    ):
        raise NeedsWarmStartError("cal requires a non-empty labeled pool")
    scores = _kernels.knn_mean_kl(
        inp.candidate_embeddings,
        inp.labeled_embeddings,
        inp.candidate_probs,
        inp.labeled_probs,
        k,
        LOG_EPS,
    )
    return _batch(inp, _top_b(scores, b), cycle)


def query_random(
    inp: StrategyInput, b: int, rng: np.random.Generator, cycle: int = 0
) -> QueryBatch:
    """Uniform selection without replacement."""
    _check_budget(inp, b)
    positions = rng.permutation(inp.n_candidates)[:b]
    return _batch(inp, positions, cycle)


def select_batch(
    kind: StrategyKind,
    inp: StrategyInput,
    b: int,
    rng: np.random.Generator | None = None,
    cycle: int = 0,
) -> QueryBatch:
    """Dispatch to the strategy named by ``kind``."""
    if kind.needs_seed and rng is None:
        raise InvalidConfigError(f"strategy {kind.name!r} requires a generator")
    if kind.name == "random":
        return query_random(inp, b, rng, cycle=cycle)
    if kind.name == "entropy":
        return query_entropy(inp, b, cycle=cycle)
    if kind.name == "coreset":
        return query_coreset(inp, b, cycle=cycle)
    if kind.name == "badge":
        return query_badge(inp, b, rng, cycle=cycle)
    if kind.name == "cal":
        return query_cal(inp, b, kind.cal_neighbors, cycle=cycle)
    raise InvalidConfigError(f"unknown strategy {kind.name!r}")
