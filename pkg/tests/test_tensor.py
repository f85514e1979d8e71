import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from src.Core.Models.errors import DimensionError, NumericError, PrecisionError, UsageError
from src.Core.Tools.Tensor import functional as F
from src.Core.Tools.Tensor.gradcheck import finite_diff_gradient, max_relative_error
from src.Core.Tools.Tensor.optim import Adam, AdamHyper, AdamState, adam_step
from src.Core.Tools.Tensor.tensor import Tensor, backward, get_default_dtype, precision

finite = st.floats(min_value=-5, max_value=5, allow_nan=False, allow_infinity=False)


def small_arrays(shape):
    return hnp.arrays(np.float64, shape, elements=finite)


# --- construction / precision ------------------------------------------------


def test_default_precision_is_float32():
    assert get_default_dtype() == np.float32
    assert Tensor([1.0, 2.0]).dtype == np.float32


def test_precision_block_restores_previous_dtype():
    with precision(np.float64):
        assert Tensor(1.0).dtype == np.float64
    assert Tensor(1.0).dtype == np.float32


def test_unsupported_precision_is_rejected():
    with pytest.raises(PrecisionError):
        with precision(np.int32):
            pass


def test_mixed_precision_ops_are_rejected():
    a = Tensor([1.0], dtype=np.float32)
    b = Tensor([1.0], dtype=np.float64)
    with pytest.raises(PrecisionError):
        F.add(a, b)


def test_nan_input_is_a_numeric_error():
    with pytest.raises(NumericError):
        Tensor([0.0, float("nan")])


def test_item_needs_one_element():
    assert Tensor([[3.5]]).item() == 3.5
    with pytest.raises(UsageError):
        Tensor([1.0, 2.0]).item()


# --- forward examples -----------------------------------------------------------


def test_matmul_examples():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(F.matmul(Tensor(np.eye(2)), a).data, a.data)
    assert np.array_equal(F.matmul(Tensor(np.zeros((2, 3))), Tensor(np.ones((3, 2)))).data, np.zeros((2, 2)))
    assert np.array_equal(F.matmul(a, Tensor([[5.0], [6.0]])).data, [[17.0], [39.0]])


def test_matmul_shape_mismatch():
    with pytest.raises(DimensionError):
        F.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_softmax_examples():
    assert np.allclose(F.softmax_rows(Tensor([[0.0, 0.0, 0.0]])).data, [[1 / 3, 1 / 3, 1 / 3]])
    assert np.allclose(F.softmax_rows(Tensor([[0.0, math.log(3.0)]])).data, [[0.25, 0.75]])


def test_softmax_ignores_a_constant_shift():
    low = F.softmax_rows(Tensor([[1.0, 2.0]])).data
    high = F.softmax_rows(Tensor([[101.0, 102.0]])).data
    assert np.allclose(low, high)
    assert np.all(np.isfinite(F.softmax_rows(Tensor([[1000.0, 1001.0]])).data))


@given(small_arrays((3, 4)))
def test_softmax_rows_are_stochastic(values):
    with precision(np.float64):
        out = F.softmax_rows(Tensor(values * 20)).data
    assert np.all(out >= 0)
    assert np.allclose(out.sum(axis=1), 1.0)


def test_conv_examples():
    x = Tensor(np.arange(2 * 3 * 3, dtype=np.float64).reshape(1, 2, 3, 3))
    identity = Tensor(np.eye(2).reshape(2, 2, 1, 1))
    assert np.allclose(F.conv2d(x, identity, Tensor(np.zeros(2))).data, x.data)

    ones = F.conv2d(Tensor(np.ones((1, 1, 5, 5))), Tensor(np.ones((1, 1, 3, 3))), Tensor(np.zeros(1)), padding=1)
    assert np.all(ones.data[0, 0, 1:4, 1:4] == 9.0)
    assert ones.data[0, 0, 0, 0] == 4.0

    bias_only = F.conv2d(x, Tensor(np.zeros((3, 2, 3, 3))), Tensor([1.5, -2.0, 0.25]), padding=1)
    assert np.all(bias_only.data[0, 0] == 1.5)
    assert np.all(bias_only.data[0, 1] == -2.0)


def test_conv_channel_mismatch():
    with pytest.raises(DimensionError):
        F.conv2d(Tensor(np.ones((1, 3, 4, 4))), Tensor(np.ones((2, 2, 1, 1))), Tensor(np.zeros(2)))


def test_elementwise_examples():
    assert F.sigmoid(Tensor(0.0)).item() == 0.5
    x = Tensor([[1.0, -2.0]])
    assert np.array_equal(F.add(x, Tensor(np.zeros((1, 2)))).data, x.data)
    assert F.relu(Tensor(-2.5)).item() == 0.0


def test_sigmoid_is_stable_for_large_inputs():
    out = F.sigmoid(Tensor([-1000.0, 1000.0], dtype=np.float64)).data
    assert out[0] == pytest.approx(0.0)
    assert out[1] == pytest.approx(1.0)


def test_broadcasting_is_narrow():
    per_channel = F.mul(Tensor(np.ones((2, 3, 4, 4))), Tensor(np.ones((2, 3, 1, 1))))
    assert per_channel.shape == (2, 3, 4, 4)
    scalar = F.add(Tensor(np.ones((2, 3))), Tensor(2.0))
    assert np.all(scalar.data == 3.0)
    with pytest.raises(DimensionError):
        F.add(Tensor(np.ones((2, 3))), Tensor(np.ones(3)))
    with pytest.raises(DimensionError):
        F.add(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 2))))


def test_pool_examples():
    assert F.global_pool("avg", Tensor(np.ones((1, 1, 3, 3)))).item() == 1.0
    grid = Tensor([[[[1.0, 3.0], [5.0, 7.0]]]])
    assert F.global_pool("avg", grid).item() == 4.0
    assert F.global_pool("max", Tensor([[[[1.0, 2.0], [3.0, 4.0]]]])).item() == 4.0
    assert F.channel_pool("max", Tensor(np.stack([np.zeros((2, 2)), np.ones((2, 2))])[None])).shape == (1, 1, 2, 2)


def test_concat_and_split():
    a, b = Tensor(np.ones((2, 3, 4, 4))), Tensor(np.zeros((2, 5, 4, 4)))
    cat = F.concat_channels([a, b])
    assert cat.shape == (2, 8, 4, 4)
    assert F.concat_channels([a]) is a
    left, right = F.split_channels(cat, [3, 5])
    assert np.array_equal(left.data, a.data)
    assert np.array_equal(right.data, b.data)
    with pytest.raises(DimensionError):
        F.concat_channels([a, Tensor(np.ones((2, 1, 3, 4)))])


def test_reshape_keeps_row_major_order():
    t = Tensor([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    assert np.array_equal(F.reshape(t, (3, 2)).data, [[1, 2], [3, 4], [5, 6]])
    feats = Tensor(np.arange(2 * 2 * 2 * 2, dtype=np.float64).reshape(2, 2, 2, 2))
    flat = F.reshape(feats, (2, 8))
    assert np.array_equal(flat.data[1], np.arange(8, 16))
    with pytest.raises(DimensionError):
        F.reshape(t, (4, 2))


def test_permute_reshape_modes():
    t = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    swapped = F.permute_reshape(t, (1, 0), mode="permute")
    assert np.array_equal(swapped.data, np.arange(6.0).reshape(2, 3).T)
    flat = F.permute_reshape(swapped, (6,), mode="reshape")
    assert np.array_equal(flat.data, [0, 3, 1, 4, 2, 5])
    backward(F.sum_all(F.mul(flat, Tensor(np.arange(6.0)))))
    assert np.array_equal(t.grad, [[0, 2, 4], [1, 3, 5]])
    with pytest.raises(DimensionError):
        F.permute_reshape(t, (0, 0), mode="permute")


def test_permute_reshape_inverses_are_exact(rng):
    x = Tensor(rng.normal(size=(2, 3, 4, 5)))
    there = F.permute_reshape(x, (0, 2, 3, 1), mode="permute")
    back = F.permute_reshape(there, (0, 3, 1, 2), mode="permute")
    assert np.array_equal(back.data, x.data)
    flat = F.permute_reshape(x, (2, 60), mode="reshape")
    assert np.array_equal(F.permute_reshape(flat, (2, 3, 4, 5), mode="reshape").data, x.data)


def test_space_to_depth_shape():
    out = F.space_to_depth(Tensor(np.arange(16.0).reshape(1, 1, 4, 4)), 2)
    assert out.shape == (1, 4, 2, 2)
    assert np.array_equal(out.data[0, 0], [[0, 2], [8, 10]])


# --- backward --------------------------------------------------------------------


def test_backward_of_sum_of_squares():
    x = Tensor([1.0, 2.0], requires_grad=True)
    F.sum_all(F.square(x)).backward()
    assert np.allclose(x.grad, [2.0, 4.0])


def test_backward_needs_a_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(UsageError):
        backward(F.square(x))


def test_gradients_accumulate_until_cleared():
    x = Tensor([1.0], requires_grad=True)
    F.sum_all(F.mul(x, Tensor(3.0))).backward()
    F.sum_all(F.mul(x, Tensor(3.0))).backward()
    assert np.allclose(x.grad, [6.0])
    x.zero_grad()
    assert x.grad is None


def test_shared_subexpression_gets_both_paths():
    x = Tensor([2.0], requires_grad=True, dtype=np.float64)
    y = F.mul(x, x)
    F.sum_all(F.add(y, y)).backward()
    assert np.allclose(x.grad, [8.0])


def test_detach_stops_the_gradient():
    x = Tensor([1.0, 2.0], requires_grad=True)
    z = Tensor([3.0, 4.0], requires_grad=True)
    w = Tensor([5.0, 6.0])
    loss = F.add(F.sum_all(F.mul(x.detach(), w)), F.sum_all(z))
    backward(loss)
    assert x.grad is None
    assert np.array_equal(z.grad, [1.0, 1.0])


@given(small_arrays((2, 3)), small_arrays((3, 2)))
def test_matmul_chain_matches_finite_differences(a_values, b_values):
    with precision(np.float64):
        a = Tensor(a_values, requires_grad=True)
        b = Tensor(b_values, requires_grad=True)
        weights = Tensor(np.arange(4.0).reshape(2, 2) - 1.5)

        def loss(_=None):
            return F.sum_all(F.mul(F.matmul(a, b), weights))

        loss().backward()
        np.testing.assert_allclose(a.grad, finite_diff_gradient(loss, a).data, rtol=1e-3, atol=1e-6)
        np.testing.assert_allclose(b.grad, finite_diff_gradient(loss, b).data, rtol=1e-3, atol=1e-6)


def test_finite_diff_closed_forms():
    with precision(np.float64):
        assert finite_diff_gradient(lambda x: F.sum_all(F.square(x)), Tensor([3.0])).item() == pytest.approx(6.0, abs=1e-6)
        assert finite_diff_gradient(lambda x: math.sin(x.item()), Tensor([0.0])).item() == pytest.approx(1.0, abs=1e-6)


def test_finite_diff_restores_the_input():
    x = Tensor([1.0, 2.0], dtype=np.float64)
    before = x.data
    finite_diff_gradient(lambda t: F.sum_all(F.square(t)), x)
    assert x.data is before
    assert np.array_equal(x.data, [1.0, 2.0])


def test_finite_diff_rejects_non_finite_objectives():
    with pytest.raises(NumericError):
        finite_diff_gradient(lambda x: float("inf"), Tensor([0.0], dtype=np.float64))


def test_two_layer_network_matches_finite_differences(rng):
    with precision(np.float64):
        x = Tensor(rng.normal(size=(3, 4)))
        w1 = Tensor(rng.normal(size=(4, 5)), requires_grad=True)
        b1 = Tensor(rng.normal(size=5), requires_grad=True)
        w2 = Tensor(rng.normal(size=(5, 2)), requires_grad=True)
        b2 = Tensor(rng.normal(size=2), requires_grad=True)

        def loss(_=None):
            hidden = F.sigmoid(F.linear(x, w1, b1))
            return F.mean_all(F.square(F.linear(hidden, w2, b2)))

        loss().backward()
        for p in (w1, b1, w2, b2):
            assert max_relative_error(p.grad, finite_diff_gradient(loss, p).data) < 1e-3


# --- adam --------------------------------------------------------------------------


def test_zero_gradient_leaves_parameters_unchanged():
    p = Tensor([1.0, -2.0], requires_grad=True)
    state = adam_step({"p": p}, {"p": np.zeros(2)}, AdamState())
    assert np.array_equal(p.data, np.array([1.0, -2.0], dtype=np.float32))
    assert state.step_count == 1


def test_first_adam_step_moves_by_lr():
    # bias correction makes the first update lr * sign(g)
    p = Tensor([0.0, 0.0], dtype=np.float64)
    adam_step({"p": p}, {"p": np.array([0.5, -3.0])}, AdamState(hyper=AdamHyper(lr=0.01)))
    assert np.allclose(p.data, [-0.01, 0.01], atol=1e-9)


def test_adam_gradient_shape_mismatch():
    p = Tensor([0.0, 0.0])
    with pytest.raises(DimensionError):
        adam_step({"p": p}, {"p": np.zeros(3)}, AdamState())


def test_adam_wrapper_minimises_a_quadratic():
    with precision(np.float64):
        p = Tensor([4.0], requires_grad=True)
        opt = Adam({"p": p}, AdamHyper(lr=0.1))
        for _ in range(300):
            opt.zero_grad()
            F.sum_all(F.square(p)).backward()
            opt.step()
    assert abs(p.data[0]) < 0.5


def test_adam_runs_are_bit_identical(rng):
    grads = [rng.normal(size=(2, 3)) for _ in range(5)]

    def run() -> np.ndarray:
        p = Tensor(np.ones((2, 3)))
        state = AdamState(hyper=AdamHyper(lr=0.01))
        for g in grads:
            state = adam_step({"p": p}, {"p": g}, state)
        return p.data

    assert np.array_equal(run(), run())


def test_ops_are_deterministic(rng):
    x = rng.normal(size=(1, 2, 5, 5))
    w = rng.normal(size=(3, 2, 3, 3))
    first = F.conv2d(Tensor(x), Tensor(w), Tensor(np.zeros(3)), padding=1).data
    second = F.conv2d(Tensor(x), Tensor(w), Tensor(np.zeros(3)), padding=1).data
    assert np.array_equal(first, second)
