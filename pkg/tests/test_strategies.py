import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poolbench.errors import (
    InsufficientCandidatesError,
    InvalidConfigError,
    MissingStrategyInputError,
    NeedsWarmStartError,
)
from poolbench.rng import substream
from poolbench.strategies import (
    StrategyInput,
    StrategyKind,
    entropy_scores,
    kmeanspp_select,
    query_badge,
    query_cal,
    query_coreset,
    query_entropy,
    query_random,
    select_batch,
)

from . import oracles


def _input(**kw):
    n = kw.pop("n", None)
    if "candidate_indices" not in kw:
        if n is None:
            for v in kw.values():
                if v is not None:
                    n = v.shape[0]
                    break
        kw["candidate_indices"] = np.arange(n)
    return StrategyInput(**kw)


def _rand_probs(rng, n, c):
    raw = rng.random((n, c)) + 1e-3
    return raw / raw.sum(axis=1, keepdims=True)


class TestEntropy:
    def test_uniform_binary(self):
        np.testing.assert_allclose(entropy_scores([[0.5, 0.5]]), np.log(2), atol=1e-12)

    def test_deterministic_distribution(self):
        np.testing.assert_allclose(entropy_scores([[1.0, 0.0]]), 0.0, atol=1e-9)

    def test_analytic_skewed(self):
        np.testing.assert_allclose(entropy_scores([[0.9, 0.1]]), 0.32508, atol=1e-4)

    def test_selects_highest_entropy(self):
        probs = np.array([[0.9, 0.1], [0.6, 0.4], [0.5, 0.5]])
        batch = query_entropy(_input(candidate_probs=probs), 2)
        assert set(batch.indices.tolist()) == {2, 1}

    def test_tie_break_lowest_position(self):
        probs = np.tile([0.5, 0.5], (4, 1))
        batch = query_entropy(_input(candidate_probs=probs), 2)
        assert set(batch.indices.tolist()) == {0, 1}

    def test_empty_batch(self):
        probs = np.tile([0.5, 0.5], (3, 1))
        batch = query_entropy(_input(candidate_probs=probs), 0)
        assert batch.indices.size == 0

    def test_insufficient_candidates(self):
        with pytest.raises(InsufficientCandidatesError):
            query_entropy(_input(candidate_probs=np.array([[0.5, 0.5]])), 2)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(1, 10), b=st.integers(0, 5))
    def test_monotone_transform_invariance(self, seed, n, b):
        # selection depends on the argsort of the scores only
        b = min(b, n)
        rng = np.random.default_rng(seed)
        probs = _rand_probs(rng, n, 3)
        base = query_entropy(_input(candidate_probs=probs), b).indices
        scores = entropy_scores(probs)
        transformed = np.exp(3.0 * scores) + 1.0  # strictly monotone
        order = np.lexsort((np.arange(n), -transformed))[:b]
        assert np.array_equal(base, order)


class TestCoreset:
    def test_farthest_point(self):
        inp = _input(
            candidate_embeddings=np.array([[1.0, 0.0], [3.0, 0.0], [2.0, 0.0]]),
            labeled_embeddings=np.array([[0.0, 0.0]]),
        )
        batch = query_coreset(inp, 1)
        assert batch.indices.tolist() == [1]

    def test_hand_traced_greedy(self):
        # after (3,0) joins the centers, (1,0) and (2,0) tie at distance 1;
        # the lower candidate position wins
        inp = _input(
            candidate_embeddings=np.array([[1.0, 0.0], [3.0, 0.0], [2.0, 0.0]]),
            labeled_embeddings=np.array([[0.0, 0.0]]),
        )
        batch = query_coreset(inp, 2)
        assert batch.indices.tolist() == [1, 0]

    def test_needs_labeled_pool(self):
        inp = _input(
            candidate_embeddings=np.zeros((3, 2)),
            labeled_embeddings=np.zeros((0, 2)),
        )
        with pytest.raises(NeedsWarmStartError):
            query_coreset(inp, 1)

    def test_covering_radius_non_increasing(self):
        rng = np.random.default_rng(0)
        cand = rng.normal(size=(40, 3))
        labeled = rng.normal(size=(5, 3))
        radii = []
        for b in range(1, 10):
            picked = query_coreset(
                _input(candidate_embeddings=cand, labeled_embeddings=labeled), b
            ).indices
            centers = np.vstack([labeled, cand[picked]])
            d = ((cand[:, None, :] - centers[None, :, :]) ** 2).sum(-1).min(1)
            radii.append(np.sqrt(d.max()))
        assert all(a >= b - 1e-12 for a, b in zip(radii, radii[1:]))

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(42)
        for trial in range(200):
            n = int(rng.integers(2, 13))
            b = int(rng.integers(1, min(3, n) + 1))
            d = int(rng.integers(1, 5))
            m = int(rng.integers(1, 6))
            cand = rng.normal(size=(n, d))
            labeled = rng.normal(size=(m, d))
            got = query_coreset(
                _input(candidate_embeddings=cand, labeled_embeddings=labeled), b
            ).indices.tolist()
            want = oracles.brute_coreset_select(cand.tolist(), labeled.tolist(), b)
            assert got == want, f"trial {trial}"


class TestKmeansPP:
    def test_exhaustion_returns_all(self):
        rng = substream(0, 0, "strategy")
        points = np.array([[1.0, 0.0], [0.0, 2.0], [3.0, 3.0]])
        picks = kmeanspp_select(points, 3, rng)
        assert sorted(picks.tolist()) == [0, 1, 2]

    def test_zero_mass_point_never_first(self):
        points = np.array([[0.0, 0.0], [2.0, 1.0]])
        for seed in range(50):
            picks = kmeanspp_select(points, 1, substream(seed, 0, "strategy"))
            assert picks.tolist() == [1]

    def test_zero_gradient_deferred_to_last(self):
        # origin point keeps zero mass while any positive-mass point remains
        points = np.array([[0.0, 0.0], [2.0, 1.0], [-1.0, 3.0], [4.0, -2.0]])
        for seed in range(30):
            picks = kmeanspp_select(points, 4, substream(seed, 0, "strategy"))
            assert picks[-1] == 0

    def test_determinism(self):
        rng_points = np.random.default_rng(2)
        points = rng_points.normal(size=(20, 4))
        a = kmeanspp_select(points, 5, substream(3, 1, "strategy"))
        b = kmeanspp_select(points, 5, substream(3, 1, "strategy"))
        assert np.array_equal(a, b)

    def test_duplicate_points_fall_back_to_uniform(self):
        points = np.tile([1.0, 1.0], (4, 1))
        picks = kmeanspp_select(points, 4, substream(1, 0, "strategy"))
        assert sorted(picks.tolist()) == [0, 1, 2, 3]

    def test_matches_enumerated_distribution(self):
        points = [[2.0, 0.0], [0.0, 3.0], [-4.0, 0.0]]
        exact = oracles.kmeanspp_exact_distribution(points, 2)
        counts = {}
        trials = 20_000
        arr = np.array(points)
        for t in range(trials):
            picks = tuple(kmeanspp_select(arr, 2, substream(t, 0, "strategy")).tolist())
            counts[picks] = counts.get(picks, 0) + 1
        assert set(counts) <= set(exact)
        for outcome, p in exact.items():
            assert abs(counts.get(outcome, 0) / trials - p) < 0.02, outcome


class TestBadge:
    def _grads(self, rng, n, width):
        return rng.normal(size=(n, width))

    def test_requires_gradients(self):
        inp = _input(candidate_indices=np.arange(3))
        with pytest.raises(MissingStrategyInputError):
            query_badge(inp, 1, substream(0, 0, "strategy"))

    def test_zero_gradient_never_picked_first(self):
        grads = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]])
        for seed in range(40):
            batch = query_badge(
                _input(grad_embeddings=grads), 1, substream(seed, 0, "strategy")
            )
            assert batch.indices[0] != 0

    def test_full_selection(self):
        rng = np.random.default_rng(0)
        grads = self._grads(rng, 5, 4)
        batch = query_badge(_input(grad_embeddings=grads), 5, substream(0, 0, "strategy"))
        assert sorted(batch.indices.tolist()) == [0, 1, 2, 3, 4]

    def test_seeded_determinism(self):
        rng = np.random.default_rng(1)
        grads = self._grads(rng, 30, 6)
        a = query_badge(_input(grad_embeddings=grads), 6, substream(5, 2, "strategy"))
        b = query_badge(_input(grad_embeddings=grads), 6, substream(5, 2, "strategy"))
        assert np.array_equal(a.indices, b.indices)

    def test_maps_candidate_indices(self):
        grads = np.array([[0.0, 0.0], [5.0, 0.0]])
        inp = StrategyInput(candidate_indices=np.array([17, 99]), grad_embeddings=grads)
        batch = query_badge(inp, 1, substream(0, 0, "strategy"))
        assert batch.indices.tolist() == [99]


class TestCal:
    def test_identical_distributions_score_zero(self):
        cand_emb = np.array([[0.0, 0.0]])
        lab_emb = np.array([[0.1, 0.0], [0.0, 0.1]])
        p = np.array([[0.3, 0.7]])
        inp = _input(
            candidate_probs=p,
            candidate_embeddings=cand_emb,
            labeled_embeddings=lab_emb,
            labeled_probs=np.tile(p, (2, 1)),
        )
        batch = query_cal(inp, 1, k=2)
        assert batch.indices.tolist() == [0]
        scores = oracles.brute_cal_select(
            cand_emb.tolist(), lab_emb.tolist(), p.tolist(), np.tile(p, (2, 1)).tolist(), 1, 2
        )
        assert scores == [0]

    def test_analytic_kl(self):
        # neighbours are certain, candidate is uniform: KL = ln 2
        from poolbench._kernels import knn_mean_kl

        score = knn_mean_kl(
            np.array([[0.0]]),
            np.array([[0.1], [0.2]]),
            np.array([[0.5, 0.5]]),
            np.array([[1.0, 0.0], [1.0, 0.0]]),
            2,
            1e-12,
        )
        np.testing.assert_allclose(score, np.log(2), rtol=1e-9)

    def test_needs_labeled_pool(self):
        inp = _input(
            candidate_probs=np.array([[0.5, 0.5]]),
            candidate_embeddings=np.zeros((1, 2)),
            labeled_embeddings=np.zeros((0, 2)),
            labeled_probs=np.zeros((0, 2)),
        )
        with pytest.raises(NeedsWarmStartError):
            query_cal(inp, 1, k=3)

    def test_scores_non_negative(self):
        rng = np.random.default_rng(8)
        from poolbench._kernels import knn_mean_kl

        scores = knn_mean_kl(
            rng.normal(size=(30, 4)),
            rng.normal(size=(12, 4)),
            _rand_probs(rng, 30, 3),
            _rand_probs(rng, 12, 3),
            5,
            1e-12,
        )
        assert (scores >= -1e-15).all()

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(77)
        for trial in range(200):
            n = int(rng.integers(1, 13))
            b = int(rng.integers(0, min(3, n) + 1))
            m = int(rng.integers(1, 12))
            d = int(rng.integers(1, 5))
            c = int(rng.integers(2, 6))
            k = int(rng.integers(1, 6))
            cand_emb = rng.normal(size=(n, d))
            lab_emb = rng.normal(size=(m, d))
            cand_p = _rand_probs(rng, n, c)
            lab_p = _rand_probs(rng, m, c)
            inp = _input(
                candidate_probs=cand_p,
                candidate_embeddings=cand_emb,
                labeled_embeddings=lab_emb,
                labeled_probs=lab_p,
            )
            got = query_cal(inp, b, k=k).indices.tolist()
            want = oracles.brute_cal_select(
                cand_emb.tolist(), lab_emb.tolist(), cand_p.tolist(), lab_p.tolist(), b, k
            )
            assert got == want, f"trial {trial}"


class TestRandom:
    def test_full_batch(self):
        inp = _input(candidate_indices=np.array([4, 7, 9]))
        batch = query_random(inp, 3, substream(0, 0, "strategy"))
        assert sorted(batch.indices.tolist()) == [4, 7, 9]

    def test_uniform_frequencies(self):
        inp = _input(candidate_indices=np.arange(4))
        counts = np.zeros(4)
        for seed in range(10_000):
            batch = query_random(inp, 1, substream(seed, 0, "strategy"))
            counts[batch.indices[0]] += 1
        np.testing.assert_allclose(counts / 10_000, 0.25, atol=0.02)

    def test_determinism(self):
        inp = _input(candidate_indices=np.arange(50))
        a = query_random(inp, 10, substream(3, 4, "strategy"))
        b = query_random(inp, 10, substream(3, 4, "strategy"))
        assert np.array_equal(a.indices, b.indices)


class TestDispatchAndKind:
    def test_unknown_name_rejected(self):
        with pytest.raises(InvalidConfigError):
            StrategyKind(name="margin")

    def test_cal_k_validated(self):
        with pytest.raises(InvalidConfigError):
            StrategyKind(name="cal", cal_neighbors=0)

    @pytest.mark.parametrize("name", ["random", "entropy", "coreset", "badge", "cal"])
    def test_every_strategy_returns_b_distinct_candidates(self, name):
        rng = np.random.default_rng(5)
        n, b = 12, 4
        idx = rng.choice(1000, size=n, replace=False)
        inp = StrategyInput(
            candidate_indices=idx,
            candidate_probs=_rand_probs(rng, n, 3),
            candidate_embeddings=rng.normal(size=(n, 4)),
            labeled_embeddings=rng.normal(size=(6, 4)),
            labeled_probs=_rand_probs(rng, 6, 3),
            grad_embeddings=rng.normal(size=(n, 15)),
        )
        batch = select_batch(StrategyKind(name=name), inp, b, substream(0, 1, "strategy"))
        assert batch.indices.size == b
        assert np.unique(batch.indices).size == b
        assert np.isin(batch.indices, idx).all()

    def test_misaligned_rows_rejected(self):
        with pytest.raises(InvalidConfigError):
            StrategyInput(
                candidate_indices=np.arange(3), candidate_probs=np.zeros((2, 2))
            )
