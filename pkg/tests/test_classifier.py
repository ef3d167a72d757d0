import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poolbench.classifier import (
    HeadParams,
    TrainConfig,
    grad_embedding,
    init_params,
    load_params,
    mean_cross_entropy,
    predict_proba,
    save_params,
    train,
)
from poolbench.errors import CannotTrainError, FormatError, InvalidConfigError
from poolbench.featureio import synth_blobs
from poolbench.rng import substream

from .oracles import finite_diff_grad


class TestInitParams:
    def test_shapes_and_bound(self):
        params = init_params(4, 3, substream(0, 0, "model-init"))
        assert params.weights.shape == (3, 4)
        assert params.bias.shape == (3,)
        assert np.abs(params.weights).max() <= 0.5
        assert np.all(params.bias == 0)

    def test_determinism(self):
        a = init_params(4, 3, substream(1, 0, "model-init"))
        b = init_params(4, 3, substream(1, 0, "model-init"))
        assert np.array_equal(a.weights, b.weights)

    def test_substreams_differ_across_cycles(self):
        a = init_params(4, 3, substream(1, 0, "model-init"))
        b = init_params(4, 3, substream(1, 1, "model-init"))
        assert not np.array_equal(a.weights, b.weights)

    def test_bad_dims(self):
        with pytest.raises(InvalidConfigError):
            init_params(0, 3, substream(0, 0, "model-init"))


class TestPredictProba:
    def test_uniform_when_zero(self):
        params = HeadParams(weights=np.zeros((4, 3)), bias=np.zeros(4))
        probs = predict_proba(params, np.array([[1.0, -2.0, 0.5]]))
        np.testing.assert_allclose(probs[0], 0.25, atol=1e-15)

    def test_analytic_two_class(self):
        params = HeadParams(weights=np.zeros((2, 3)), bias=np.array([10.0, 0.0]))
        probs = predict_proba(params, np.ones((1, 3)))
        np.testing.assert_allclose(probs[0], [0.9999546021312976, 4.5397868702e-05], atol=1e-6)

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        w = rng.normal(size=(3, 5))
        x = rng.normal(size=(7, 5))
        a = predict_proba(HeadParams(w, np.zeros(3)), x)
        b = predict_proba(HeadParams(w, np.full(3, 123.0)), x)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_dimension_mismatch(self):
        params = HeadParams(weights=np.zeros((2, 3)), bias=np.zeros(2))
        with pytest.raises(ValueError):
            predict_proba(params, np.zeros((1, 4)))

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10_000), m=st.integers(1, 6), c=st.integers(2, 6), d=st.integers(1, 6))
    def test_rows_sum_to_one(self, seed, m, c, d):
        rng = np.random.default_rng(seed)
        params = HeadParams(rng.normal(size=(c, d), scale=5), rng.normal(size=c, scale=5))
        probs = predict_proba(params, rng.normal(size=(m, d), scale=5))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert (probs >= 0).all() and (probs <= 1).all()


class TestGradEmbedding:
    def test_zero_at_one_hot(self):
        # huge margin makes softmax one-hot to double precision
        params = HeadParams(weights=np.array([[100.0], [-100.0]]), bias=np.zeros(2))
        g = grad_embedding(params, np.array([[5.0]]))
        np.testing.assert_allclose(g, 0.0, atol=1e-40)

    def test_hand_expansion(self):
        # C=2, D=1: chosen so that softmax(Wx+b) = [0.7, 0.3]
        logit = np.log(0.7 / 0.3)
        params = HeadParams(weights=np.array([[logit], [0.0]]), bias=np.zeros(2))
        g = grad_embedding(params, np.array([[1.0]]))
        np.testing.assert_allclose(g[0], [-0.3, -0.3, 0.3, 0.3], atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            d = int(rng.integers(1, 9))
            c = int(rng.integers(2, 6))
            params = HeadParams(rng.normal(size=(c, d)), rng.normal(size=c))
            x = rng.normal(size=(1, d))
            g = grad_embedding(params, x)[0]
            pseudo = int(predict_proba(params, x)[0].argmax())
            ref = np.array(
                finite_diff_grad(params.weights.tolist(), params.bias.tolist(), x[0].tolist(), pseudo)
            )
            denom = max(np.abs(ref).max(), 1e-12)
            assert np.abs(g - ref).max() / denom < 1e-5

    def test_norm_zero_iff_one_hot(self):
        rng = np.random.default_rng(3)
        params = HeadParams(rng.normal(size=(3, 2)), rng.normal(size=3))
        x = rng.normal(size=(20, 2))
        g = grad_embedding(params, x)
        probs = predict_proba(params, x)
        one_hot = (probs.max(axis=1) == 1.0)
        norms = np.linalg.norm(g, axis=1)
        assert np.array_equal(norms == 0.0, one_hot)


class TestTrain:
    def test_separable_blobs_reach_full_train_accuracy(self):
        bundle = synth_blobs(40, 10, 3, 2, [0.5, 0.5], 0.02, substream(5, 0, "synth"))
        params = train(
            bundle.train_x,
            bundle.train_y,
            TrainConfig(epochs=15),
            substream(5, 0, "shuffle"),
            num_classes=2,
            init_rng=substream(5, 0, "model-init"),
        )
        pred = predict_proba(params, bundle.train_x).argmax(axis=1)
        assert (pred == bundle.train_y).mean() == 1.0

    def test_single_step_full_warmup_boundary(self):
        # one total step with warmup_fraction=1 -> that step runs at full lr
        x = np.array([[1.0, 0.0]])
        y = np.array([0])
        cfg = TrainConfig(epochs=1, warmup_fraction=1.0, minibatch_size=8)
        start = init_params(2, 2, substream(0, 0, "model-init"))
        got = train(x, y, cfg, substream(0, 0, "shuffle"), start=start)
        assert not np.array_equal(got.weights, start.weights)
        assert np.isfinite(mean_cross_entropy(got, x, y))

    def test_warm_start_keeps_perfect_fit(self):
        bundle = synth_blobs(40, 10, 3, 2, [0.5, 0.5], 0.02, substream(6, 0, "synth"))
        cfg = TrainConfig(epochs=15)
        first = train(
            bundle.train_x,
            bundle.train_y,
            cfg,
            substream(6, 0, "shuffle"),
            num_classes=2,
            init_rng=substream(6, 0, "model-init"),
        )
        loss_before = mean_cross_entropy(first, bundle.train_x, bundle.train_y)
        second = train(
            bundle.train_x, bundle.train_y, cfg, substream(6, 1, "shuffle"), start=first
        )
        loss_after = mean_cross_entropy(second, bundle.train_x, bundle.train_y)
        pred = predict_proba(second, bundle.train_x).argmax(axis=1)
        assert loss_after <= loss_before
        assert (pred == bundle.train_y).mean() == 1.0

    def test_final_loss_not_above_initial(self):
        bundle = synth_blobs(60, 10, 4, 3, [0.4, 0.3, 0.3], 0.3, substream(8, 0, "synth"))
        start = init_params(4, 3, substream(8, 0, "model-init"))
        before = mean_cross_entropy(start, bundle.train_x, bundle.train_y)
        fitted = train(
            bundle.train_x, bundle.train_y, TrainConfig(), substream(8, 0, "shuffle"), start=start
        )
        after = mean_cross_entropy(fitted, bundle.train_x, bundle.train_y)
        assert after <= before

    def test_determinism(self):
        bundle = synth_blobs(30, 5, 3, 2, [0.5, 0.5], 0.2, substream(9, 0, "synth"))

        def go():
            return train(
                bundle.train_x,
                bundle.train_y,
                TrainConfig(epochs=3),
                substream(9, 0, "shuffle"),
                num_classes=2,
                init_rng=substream(9, 0, "model-init"),
            )

        a, b = go(), go()
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)

    def test_empty_labeled_set_rejected(self):
        with pytest.raises(CannotTrainError):
            train(
                np.zeros((0, 3)),
                np.zeros(0, dtype=int),
                TrainConfig(),
                substream(0, 0, "shuffle"),
                num_classes=2,
                init_rng=substream(0, 0, "model-init"),
            )

    def test_absent_classes_allowed(self):
        x = np.array([[0.0, 1.0], [1.0, 0.0]])
        y = np.array([0, 2])  # class 1 missing from the labeled pool
        params = train(
            x, y, TrainConfig(epochs=2), substream(1, 0, "shuffle"),
            num_classes=4, init_rng=substream(1, 0, "model-init"),
        )
        assert params.num_classes == 4


class TestCheckpoint:
    def test_roundtrip_identity(self, tmp_path):
        params = init_params(5, 3, substream(2, 0, "model-init"))
        save_params(params, tmp_path / "head.aglh")
        got = load_params(tmp_path / "head.aglh")
        assert np.array_equal(got.weights, params.weights)
        assert np.array_equal(got.bias, params.bias)

    def test_bad_magic(self, tmp_path):
        (tmp_path / "head.aglh").write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(FormatError):
            load_params(tmp_path / "head.aglh")
