import math

import numpy as np
import pytest

from pidopt.data import Batch
from pidopt.network import (
    MlpModel,
    evaluate,
    forward,
    he_init,
    mlp_loss_and_grad,
    params_to_vector,
    set_params_from_vector,
    softmax,
)
from pidopt.oracle import finite_diff_grad
from pidopt.rng import Rng


def tiny_batch(input_dim, n_classes, n=6, seed=0):
    rng = Rng(seed)
    x = rng.normals(n * input_dim).reshape(n, input_dim)
    y = (rng.raw(n) % np.uint64(n_classes)).astype(np.int64)
    return Batch(x, y)


class TestHeInit:
    def test_seed_reproducibility(self):
        a = he_init([10, 8, 3], seed=7)
        b = he_init([10, 8, 3], seed=7)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)
        c = he_init([10, 8, 3], seed=8)
        assert not np.array_equal(a.weights[0], c.weights[0])

    def test_biases_zero(self):
        model = he_init([5, 4, 3], seed=0)
        assert all(np.all(b == 0.0) for b in model.biases)

    def test_variance_tracks_fan_in(self):
        model = he_init([1000, 1000], seed=1)
        var = model.weights[0].var()
        assert abs(var - 0.002) < 0.0002

    def test_rejects_too_few_dims(self):
        with pytest.raises(ValueError):
            he_init([5], seed=0)
        with pytest.raises(ValueError):
            he_init([], seed=0)


class TestForward:
    def test_softmax_rows_sum_to_one(self):
        logits = Rng(2).normals(40).reshape(8, 5) * 30.0
        p = softmax(logits)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-6)
        assert np.all(p >= 0.0)

    def test_uniform_logits_loss_is_log_num_classes(self):
        model = MlpModel([4, 10], [np.zeros((4, 10))], [np.zeros(10)])
        batch = tiny_batch(4, 10, n=12)
        loss, _, acc = mlp_loss_and_grad(model, batch, training=False, rng_seed=0)
        assert loss == pytest.approx(math.log(10.0), rel=1e-12)
        # argmax ties break toward class 0
        assert acc == pytest.approx(np.mean(batch.labels == 0))

    def test_eval_mode_is_deterministic(self):
        model = he_init([6, 5, 3], seed=3, dropout_rate=0.4)
        batch = tiny_batch(6, 3)
        out1 = mlp_loss_and_grad(model, batch, training=False, rng_seed=11)
        out2 = mlp_loss_and_grad(model, batch, training=False, rng_seed=99)
        assert out1[0] == out2[0]
        assert np.array_equal(out1[1], out2[1])

    def test_bad_input_dim_rejected(self):
        model = he_init([6, 3], seed=0)
        with pytest.raises(ValueError, match="shape"):
            forward(model, np.zeros((2, 5)))

    def test_label_out_of_range_rejected(self):
        model = he_init([4, 3], seed=0)
        batch = Batch(np.zeros((2, 4)), np.array([0, 3]))
        with pytest.raises(ValueError, match="labels"):
            mlp_loss_and_grad(model, batch, training=False, rng_seed=0)


class TestBackprop:
    @pytest.mark.parametrize("dims", [[5, 3], [6, 4, 3], [5, 8, 4, 3]])
    def test_gradient_matches_finite_differences(self, dims):
        model = he_init(dims, seed=13)
        batch = tiny_batch(dims[0], dims[-1], seed=dims[-2])
        _, grads, _ = mlp_loss_and_grad(model, batch, training=False, rng_seed=0)
        w0 = params_to_vector(model)

        def loss_at(vec):
            set_params_from_vector(model, vec)
            return mlp_loss_and_grad(model, batch, training=False, rng_seed=0)[0]

        fd = finite_diff_grad(loss_at, w0)
        set_params_from_vector(model, w0)
        rel = np.linalg.norm(grads - fd) / np.linalg.norm(grads)
        assert rel < 1e-7

    def test_gradient_with_dropout_mask_fixed(self):
        # With the seed held fixed the masked loss is still a deterministic
        # function of the parameters, so central differences apply.
        model = he_init([5, 6, 3], seed=21, dropout_rate=0.5)
        batch = tiny_batch(5, 3, seed=4)
        _, grads, _ = mlp_loss_and_grad(model, batch, training=True, rng_seed=42)
        w0 = params_to_vector(model)

        def loss_at(vec):
            set_params_from_vector(model, vec)
            return mlp_loss_and_grad(model, batch, training=True, rng_seed=42)[0]

        fd = finite_diff_grad(loss_at, w0)
        set_params_from_vector(model, w0)
        rel = np.linalg.norm(grads - fd) / np.linalg.norm(grads)
        assert rel < 1e-7


class TestDropout:
    def test_zero_fraction_and_survivor_scaling(self):
        rate = 0.3
        h = 500
        n = 200
        eye = np.eye(h)
        model = MlpModel([h, h, h], [eye.copy(), eye.copy()],
                         [np.zeros(h), np.zeros(h)], dropout_rate=rate)
        out = forward(model, np.ones((n, h)), training=True, rng_seed=5)
        survivors = out[out != 0.0]
        np.testing.assert_allclose(survivors, 1.0 / (1.0 - rate), rtol=1e-15)
        zero_frac = np.mean(out == 0.0)
        se = math.sqrt(rate * (1.0 - rate) / out.size)
        assert abs(zero_frac - rate) < 3.0 * se

    def test_mask_reproducible_per_seed(self):
        model = he_init([6, 8, 3], seed=0, dropout_rate=0.5)
        x = Rng(1).normals(4 * 6).reshape(4, 6)
        a = forward(model, x, training=True, rng_seed=7)
        b = forward(model, x, training=True, rng_seed=7)
        c = forward(model, x, training=True, rng_seed=8)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_rate_zero_training_equals_eval(self):
        model = he_init([6, 8, 3], seed=0, dropout_rate=0.0)
        x = Rng(2).normals(4 * 6).reshape(4, 6)
        assert np.array_equal(forward(model, x, training=True, rng_seed=1),
                              forward(model, x, training=False))


class TestParamVector:
    def test_round_trip(self):
        model = he_init([4, 5, 3], seed=2)
        vec = params_to_vector(model)
        assert vec.size == model.num_params
        set_params_from_vector(model, vec * 2.0)
        np.testing.assert_array_equal(params_to_vector(model), vec * 2.0)

    def test_size_mismatch_rejected(self):
        model = he_init([4, 3], seed=2)
        with pytest.raises(ValueError):
            set_params_from_vector(model, np.zeros(model.num_params + 1))


class TestEvaluate:
    def test_matches_loss_and_grad_path(self):
        model = he_init([6, 5, 4], seed=9)
        batch = tiny_batch(6, 4, n=50, seed=8)
        loss_ref, _, acc_ref = mlp_loss_and_grad(model, batch, training=False, rng_seed=0)
        loss, acc = evaluate(model, batch.inputs, batch.labels, chunk=16)
        assert loss == pytest.approx(loss_ref, rel=1e-10)
        assert acc == pytest.approx(acc_ref)
