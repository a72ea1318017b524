"""Autodiff engine tests: every operator is checked against an independent
oracle (loop-level reimplementation or central finite differences)."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualcast.errors import ContractError, NumericError, ShapeError
from dualcast.tensor import (
    Tensor,
    concat,
    finite_diff_check,
    gather_rows,
    gelu,
    layer_norm,
    pad_rows,
    roll,
    softmax,
)


def _rng(seed=0):
    return np.random.default_rng(seed)


def test_matmul_matches_triple_loop():
    rng = _rng(1)
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(4, 2))
    out = (Tensor(a) @ Tensor(b)).data
    expected = np.zeros((3, 2))
    for i in range(3):
        for j in range(2):
            for k in range(4):
                expected[i, j] += a[i, k] * b[k, j]
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-15)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
        Tensor(np.zeros((2, 3))) @ Tensor(np.zeros((2, 2)))


def test_arithmetic_values():
    a = Tensor(np.array([1.0, -2.0, 3.0]))
    b = Tensor(np.array([4.0, 5.0, 0.5]))
    np.testing.assert_array_equal((a + b).data, [5.0, 3.0, 3.5])
    np.testing.assert_array_equal((a - b).data, [-3.0, -7.0, 2.5])
    np.testing.assert_array_equal((a * b).data, [4.0, -10.0, 1.5])
    np.testing.assert_array_equal((a / b).data, [0.25, -0.4, 6.0])
    np.testing.assert_array_equal((-a).data, [-1.0, 2.0, -3.0])
    np.testing.assert_array_equal((a**2).data, [1.0, 4.0, 9.0])


def test_softmax_matches_exp_normalize():
    rng = _rng(2)
    x = rng.normal(size=(4, 6)) * 3
    out = softmax(Tensor(x), axis=-1).data
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    np.testing.assert_allclose(out, e / e.sum(axis=-1, keepdims=True), atol=1e-15)
    np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-12)


def test_gelu_frozen_values():
    # tanh form evaluated independently
    x = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    c = np.sqrt(2.0 / np.pi)
    expected = 0.5 * x * (1.0 + np.tanh(c * (x + 0.044715 * x**3)))
    np.testing.assert_allclose(gelu(Tensor(x)).data, expected, atol=1e-15)
    assert gelu(Tensor(np.array([0.0]))).data[0] == 0.0


def test_backward_accumulates_when_input_reused():
    x = Tensor(np.array([2.0, 3.0]), requires_grad=True)
    y = (x * x + x).sum()  # d/dx = 2x + 1
    y.backward()
    np.testing.assert_allclose(x.grad, [5.0, 7.0])


def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ContractError):
        (x * 2.0).backward()


def test_non_finite_result_raises_at_the_op():
    a = Tensor(np.array([1.0]))
    b = Tensor(np.array([0.0]))
    with pytest.raises(NumericError, match="div"):
        a / b


def test_grad_broadcast_unbroadcasts():
    x = Tensor(np.ones((3, 4)), requires_grad=True)
    row = Tensor(np.arange(4.0), requires_grad=True)
    (x * row).sum().backward()
    np.testing.assert_array_equal(x.grad, np.tile(np.arange(4.0), (3, 1)))
    np.testing.assert_array_equal(row.grad, np.full(4, 3.0))


@pytest.mark.parametrize(
    "fn",
    [
        lambda t: (t * t * t).sum(),
        # softmax needs a weighted readout: a bare row sum is identically 1
        lambda t: (softmax(t, axis=-1) * Tensor(np.arange(12.0).reshape(3, 4))).sum(),
        lambda t: gelu(t).mean(),
        lambda t: (t.reshape(6, 2) @ Tensor(np.arange(2.0)[:, None] + 1.0)).sum(),
        lambda t: t[1:3].sum(axis=0).mean(),
        lambda t: roll(t, 2, axis=0).mean(axis=0).sum(),
        lambda t: (t.sqrt() if False else (t * t).sum(axis=1, keepdims=True)).mean(),
        lambda t: pad_rows(t, 1, 6).sum() + gather_rows(t, [0, 0, 2]).mean(),
    ],
)
def test_finite_difference_ops(fn):
    rng = _rng(7)
    x = rng.normal(size=(3, 4)) + 0.1
    res = finite_diff_check(fn, Tensor(x.copy()))
    assert res.max_rel_err < 1e-6


def test_finite_difference_layer_norm():
    rng = _rng(8)
    x = rng.normal(size=(4, 5))
    gain = Tensor(rng.normal(size=5) + 1.5)
    bias = Tensor(rng.normal(size=5))
    w = rng.normal(size=5)  # weighted readout keeps the gradient non-degenerate

    def fn(t):
        return (layer_norm(t, gain, bias) * Tensor(w)).sum() + (
            layer_norm(t, gain, bias) ** 3
        ).mean()

    res = finite_diff_check(fn, Tensor(x.copy()))
    assert res.max_rel_err < 1e-6


def test_layer_norm_normalizes_rows():
    rng = _rng(9)
    x = rng.normal(size=(6, 8)) * 4 + 2
    out = layer_norm(
        Tensor(x), Tensor(np.ones(8)), Tensor(np.zeros(8)), eps=1e-12
    ).data
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.var(axis=-1), 1.0, atol=1e-9)


def test_concat_and_grads():
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(np.full((2, 2), 2.0), requires_grad=True)
    out = concat([a, b], axis=1)
    assert out.shape == (2, 5)
    (out * out).sum().backward()
    np.testing.assert_array_equal(a.grad, np.full((2, 3), 2.0))
    np.testing.assert_array_equal(b.grad, np.full((2, 2), 4.0))


def test_gather_rows_accumulates_duplicate_indices():
    x = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
    gather_rows(x, [1, 1, 0]).sum().backward()
    np.testing.assert_array_equal(x.grad, [[1.0, 1.0], [2.0, 2.0], [0.0, 0.0]])


def test_roll_semantics_match_numpy():
    x = np.arange(10.0).reshape(5, 2)
    for shift in (-3, -1, 0, 2, 7):
        np.testing.assert_array_equal(
            roll(Tensor(x), shift, axis=0).data, np.roll(x, shift, axis=0)
        )


def test_graph_is_consumed_after_backward():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    y = (x * x).sum()
    y.backward()
    assert y._parents == () and y._backward is None


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_matmul_matches_numpy(m, k, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(m, k))
    b = rng.normal(size=(k, n))
    np.testing.assert_allclose((Tensor(a) @ Tensor(b)).data, a @ b, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_softmax_rows_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(3, 7)) * rng.uniform(0.1, 20)
    out = softmax(Tensor(x), axis=-1).data
    assert np.all(out > 0)
    np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-10)


def test_finite_diff_check_flags_wrong_gradient():
    # a function lying about its gradient: value of x**2 with a detached square
    def liar(t):
        return (t * Tensor(t.data)).sum()  # second factor is a constant copy

    res = finite_diff_check(liar, Tensor(np.array([1.0, 2.0])))
    # analytic sees d/dx (x * c) = c = x, numeric sees d/dx x^2 = 2x
    assert res.max_rel_err > 0.3
