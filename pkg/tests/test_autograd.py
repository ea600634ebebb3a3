"""Tape-level checks: every op's vjp against central differences, plus
the backward() and ParamStore contracts."""

import numpy as np
import pytest

from spantag import autograd as ag
from spantag.autograd import AutogradError, Node, ParamStore, backward
from spantag.gradcheck import finite_diff_check


def _store(*arrays, seed=0):
    store = ParamStore(seed=seed, dtype=np.float64)
    params = [store.add(f"p{i}", a.shape, a) for i, a in enumerate(arrays)]
    return store, params


def _check(closure, store, **kwargs):
    report = finite_diff_check(closure, store, **kwargs)
    assert report.passed, report.max_rel_err
    return report


rng = np.random.default_rng(12345)


class TestOpGradients:
    def test_add_broadcast(self):
        store, (a, b) = _store(rng.normal(size=(3, 4)), rng.normal(size=(4,)))
        _check(lambda: ag.sum_all(ag.sigmoid(ag.add(a, b))), store)

    def test_mul_broadcast(self):
        store, (a, b) = _store(rng.normal(size=(3, 4)), rng.normal(size=(3, 1)))
        _check(lambda: ag.sum_all(ag.tanh(ag.mul(a, b))), store)

    def test_sub_and_neg(self):
        store, (a, b) = _store(rng.normal(size=(5,)), rng.normal(size=(5,)))
        _check(lambda: ag.sum_all(ag.sub(a, -b) * 0.5), store)

    def test_matmul_2d_2d(self):
        store, (a, b) = _store(rng.normal(size=(3, 4)), rng.normal(size=(4, 2)))
        _check(lambda: ag.sum_all(ag.tanh(ag.matmul(a, b))), store)

    def test_matmul_2d_1d(self):
        store, (a, b) = _store(rng.normal(size=(3, 4)), rng.normal(size=(4,)))
        _check(lambda: ag.sum_all(ag.sigmoid(ag.matmul(a, b))), store)

    def test_matmul_1d_2d(self):
        store, (a, b) = _store(rng.normal(size=(3,)), rng.normal(size=(3, 2)))
        _check(lambda: ag.sum_all(ag.tanh(ag.matmul(a, b))), store)

    def test_matmul_1d_1d(self):
        store, (a, b) = _store(rng.normal(size=(4,)), rng.normal(size=(4,)))
        _check(lambda: ag.tanh(ag.matmul(a, b)), store)

    def test_matmul_shape_mismatch(self):
        store, (a, b) = _store(rng.normal(size=(3, 4)), rng.normal(size=(3,)))
        with pytest.raises(AutogradError, match="mismatch"):
            ag.matmul(a, b)

    def test_transpose(self):
        store, (a,) = _store(rng.normal(size=(2, 5)))
        _check(lambda: ag.sum_all(ag.sigmoid(ag.transpose(a))), store)

    def test_unary_chain(self):
        store, (a,) = _store(rng.uniform(0.5, 2.0, size=(6,)))
        _check(lambda: ag.sum_all(ag.log(ag.exp(ag.tanh(a)))), store)

    def test_relu_away_from_kink(self):
        store, (a,) = _store(np.array([1.0, -2.0, 0.5, -0.25]))
        _check(lambda: ag.sum_all(ag.relu(a) * ag.relu(a)), store)

    def test_clip_passes_gradient_inside(self):
        store, (a,) = _store(np.array([0.2, 0.9, 0.4]))
        _check(lambda: ag.sum_all(ag.log(ag.clip(ag.sigmoid(a), 1e-7, 1 - 1e-7))), store)

    def test_clip_blocks_gradient_outside(self):
        store, (a,) = _store(np.array([5.0]))
        out = ag.clip(a, -1.0, 1.0)
        backward(ag.sum_all(out))
        assert a.grad[0] == 0.0

    def test_sum_axis(self):
        store, (a,) = _store(rng.normal(size=(3, 4)))
        _check(lambda: ag.sum_all(ag.tanh(ag.sum_axis(a, axis=1))), store)

    def test_concat_and_slice(self):
        store, (a, b) = _store(rng.normal(size=(3,)), rng.normal(size=(2,)))
        _check(lambda: ag.sum_all(ag.tanh(ag.slice1d(ag.concat([a, b]), 1, 4))), store)

    def test_stack_and_row(self):
        store, (a, b) = _store(rng.normal(size=(4,)), rng.normal(size=(4,)))

        def closure():
            m = ag.stack_rows([ag.tanh(a), ag.sigmoid(b)])
            return ag.sum_all(ag.row(m, 0) * ag.row(m, 1))

        _check(closure, store)

    def test_take_rows_with_repeats(self):
        store, (a,) = _store(rng.normal(size=(4, 3)))
        _check(lambda: ag.sum_all(ag.tanh(ag.take_rows(a, [0, 2, 0, 0]))), store)

    def test_gather_rc(self):
        store, (a,) = _store(rng.normal(size=(3, 4)))
        _check(lambda: ag.sum_all(ag.gather_rc(a, [0, 1, 2, 0], [1, 3, 0, 1])), store)

    def test_pad_ones(self):
        store, (a,) = _store(rng.normal(size=(3, 2)))
        _check(lambda: ag.sum_all(ag.tanh(ag.pad_ones(a))), store)
        value = ag.pad_ones(a).value
        assert np.all(value[:, -1] == 1.0)

    def test_pad_ones_vector(self):
        store, (a,) = _store(rng.normal(size=(3,)))
        _check(lambda: ag.sum_all(ag.tanh(ag.pad_ones(a))), store)

    def test_pairwise_bilinear(self):
        store, (u, w, v) = _store(
            rng.normal(size=(3, 2)), rng.normal(size=(4, 2, 3)), rng.normal(size=(3, 3))
        )
        _check(lambda: ag.sum_all(ag.tanh(ag.pairwise_bilinear(u, w, v) * 0.3)), store)

    def test_logsumexp_rows(self):
        store, (a,) = _store(rng.normal(size=(3, 5)) * 3.0)
        _check(lambda: ag.sum_all(ag.logsumexp_rows(a)), store)
        expected = np.log(np.exp(a.value).sum(axis=1))
        np.testing.assert_allclose(ag.logsumexp_rows(a).value, expected, rtol=1e-12)

    def test_dropout_mask_gradient(self):
        store, (a,) = _store(rng.normal(size=(20,)))
        mask_rng = np.random.default_rng(0)
        dropped = ag.dropout(a, 0.5, mask_rng)
        backward(ag.sum_all(dropped))
        kept = dropped.value != 0.0
        np.testing.assert_allclose(a.grad[kept], 2.0)
        np.testing.assert_allclose(a.grad[~kept], 0.0)


class TestBackwardContract:
    def test_requires_scalar(self):
        store, (a,) = _store(np.ones(3))
        with pytest.raises(AutogradError, match="scalar"):
            backward(ag.tanh(a))

    def test_constant_loss_gives_zero_gradients(self):
        store, (a,) = _store(np.ones(3))
        backward(ag.const(2.5, dtype=np.float64))
        np.testing.assert_array_equal(a.grad, np.zeros(3))

    def test_half_squared_norm_gradient_is_w(self):
        w = rng.normal(size=(7,))
        store, (a,) = _store(w)
        backward(ag.sum_all(ag.mul(a, a)) * 0.5)
        np.testing.assert_allclose(a.grad, w, rtol=1e-15)

    def test_gradients_accumulate_until_zeroed(self):
        store, (a,) = _store(np.ones(2))
        backward(ag.sum_all(a))
        backward(ag.sum_all(a))
        np.testing.assert_array_equal(a.grad, [2.0, 2.0])
        store.zero_grad()
        np.testing.assert_array_equal(a.grad, [0.0, 0.0])

    def test_shared_subexpression(self):
        store, (a,) = _store(np.array([3.0]))
        t = ag.sum_all(a)
        backward(ag.mul(t, t))  # d/da (sum a)^2 = 2 * sum a = 6
        np.testing.assert_allclose(a.grad, [6.0])


class TestParamStore:
    def test_duplicate_name_rejected(self):
        store = ParamStore(dtype=np.float64)
        store.add("w", (2,), 0.0)
        with pytest.raises(ValueError, match="duplicate"):
            store.add("w", (2,), 0.0)

    def test_grad_buffer_matches_shape(self):
        store = ParamStore(dtype=np.float64)
        node = store.add("w", (2, 3), 1.0)
        assert node.grad.shape == (2, 3)
        assert store.n_params == 6

    def test_values_load_round_trip(self):
        store = ParamStore(seed=1, dtype=np.float64)
        store.add("w", (3,), lambda r, s, d: r.normal(size=s).astype(d))
        snapshot = store.values()
        store["w"].value[...] = 0.0
        store.load_values(snapshot)
        np.testing.assert_array_equal(store["w"].value, snapshot["w"])

    def test_load_shape_mismatch(self):
        store = ParamStore(dtype=np.float64)
        store.add("w", (3,), 0.0)
        with pytest.raises(ValueError, match="shape"):
            store.load_values({"w": np.zeros((2,))})

    def test_load_missing_parameter(self):
        store = ParamStore(dtype=np.float64)
        store.add("w", (3,), 0.0)
        with pytest.raises(ValueError, match="missing"):
            store.load_values({})

    def test_seeded_init_is_deterministic(self):
        init = lambda r, s, d: r.normal(size=s).astype(d)
        a = ParamStore(seed=7, dtype=np.float64).add("w", (4,), init)
        b = ParamStore(seed=7, dtype=np.float64).add("w", (4,), init)
        np.testing.assert_array_equal(a.value, b.value)
