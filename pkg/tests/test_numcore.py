import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from asbim.errors import ConfigurationError, EmptySequenceError, NumericalError
from asbim.numcore import (
    dense_forward,
    finite_difference_check,
    gamma_from_logit,
    gamma_slope,
    masked_softmax,
    relative_error,
    relu,
    sigmoid,
)
from asbim.numcore.ops import GAMMA_LOGIT_BOUND

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_dense_forward_identity():
    np.testing.assert_array_equal(dense_forward([1, 2], [[1, 0], [0, 1]], [0, 0]), [1, 2])


def test_dense_forward_arithmetic():
    np.testing.assert_array_equal(dense_forward([1, 1], [[2, 3]], [-5]), [0])


def test_dense_forward_matches_dot_product_oracle():
    rng = np.random.default_rng(3)
    x, W, b = rng.normal(size=4), rng.normal(size=(3, 4)), rng.normal(size=3)
    oracle = [math.fsum(W[r, c] * x[c] for c in range(4)) + b[r] for r in range(3)]
    np.testing.assert_allclose(dense_forward(x, W, b), oracle, rtol=0, atol=1e-14)


@pytest.mark.parametrize("W,b", [(np.ones((3, 2)), np.ones(3)), (np.ones((3, 4)), np.ones(2))])
def test_dense_forward_shape_mismatch(W, b):
    with pytest.raises(ConfigurationError):
        dense_forward(np.ones(4), W, b)


def test_dense_forward_rejects_non_finite():
    with pytest.raises(NumericalError):
        dense_forward([np.nan, 1.0], np.eye(2), [0, 0])


@given(arrays(np.float64, 3, elements=finite), arrays(np.float64, 3, elements=finite),
       st.floats(-3, 3), st.floats(-3, 3))
def test_dense_forward_affine(x, y, a, c):
    rng = np.random.default_rng(0)
    W, b = rng.normal(size=(2, 3)), rng.normal(size=2)
    lhs = dense_forward(a * x + c * y, W, b)
    rhs = a * dense_forward(x, W, b) + c * dense_forward(y, W, b) - (a + c - 1) * b
    scale = 1.0 + np.abs(W) @ (np.abs(a * x) + np.abs(c * y)) + (abs(a) + abs(c) + 1) * np.abs(b)
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale)


def test_relu_examples():
    np.testing.assert_array_equal(relu([-1, 0, 2]), [0, 0, 2])
    np.testing.assert_array_equal(relu([-3, -0.5]), [0, 0])
    np.testing.assert_array_equal(relu([0.1, 7]), [0.1, 7])


@given(arrays(np.float64, st.integers(1, 8), elements=finite))
def test_relu_idempotent(x):
    np.testing.assert_array_equal(relu(relu(x)), relu(x))


def test_masked_softmax_uniform():
    np.testing.assert_allclose(masked_softmax([0, 0, 0], [True] * 3), [1 / 3] * 3, rtol=0, atol=1e-15)


def test_masked_softmax_single_position():
    np.testing.assert_array_equal(masked_softmax([5, 0], [True, False]), [1, 0])


def test_masked_softmax_direct_oracle():
    e = [math.exp(v) for v in (1, 2, 3)]
    np.testing.assert_allclose(masked_softmax([1, 2, 3], [True] * 3), [v / sum(e) for v in e],
                               rtol=1e-14)


def test_masked_softmax_all_masked():
    with pytest.raises(EmptySequenceError):
        masked_softmax([1.0, 2.0], [False, False])


def test_masked_softmax_large_scores_stable():
    out = masked_softmax([1000.0, 999.0, -1000.0], [True, True, True])
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out[:2], [1 / (1 + math.exp(-1)), 1 / (1 + math.e)], rtol=1e-14)


@st.composite
def scores_and_mask(draw):
    n = draw(st.integers(1, 12))
    s = draw(arrays(np.float64, n, elements=st.floats(-50, 50)))
    m = np.array(draw(st.lists(st.booleans(), min_size=n, max_size=n)))
    m[draw(st.integers(0, n - 1))] = True
    return s, m


@given(scores_and_mask(), st.floats(-20, 20))
def test_masked_softmax_properties(sm, shift):
    s, m = sm
    a = masked_softmax(s, m)
    assert np.all(a >= 0)
    assert np.all(a[~m] == 0.0)
    assert abs(math.fsum(a) - 1.0) <= 1e-12
    shifted = masked_softmax(np.where(m, s + shift, s), m)
    np.testing.assert_allclose(shifted, a, rtol=1e-12, atol=1e-15)


def test_sigmoid_extremes_and_symmetry():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(800.0) == 1.0 and sigmoid(-800.0) == 0.0
    z = np.linspace(-30, 30, 61)
    np.testing.assert_allclose(sigmoid(z) + sigmoid(-z), 1.0, rtol=0, atol=1e-15)


@given(st.floats(-1e6, 1e6))
def test_gamma_strictly_inside_unit_interval(logit):
    g = gamma_from_logit(logit)
    assert 0.0 < g < 1.0


def test_gamma_slope():
    assert gamma_from_logit(0.0) == 0.5
    assert gamma_slope(0.0) == 0.25
    assert gamma_slope(GAMMA_LOGIT_BOUND + 1) == 0.0
    for z in (-3.0, 0.7, 5.0):
        num = (gamma_from_logit(z + 1e-6) - gamma_from_logit(z - 1e-6)) / 2e-6
        assert relative_error(gamma_slope(z), num) < 1e-7


def test_relative_error_floor():
    assert relative_error(1e-9, 0.0) == pytest.approx(1e-9 / 1e-8)
    assert relative_error(2.0, 1.0) == 1.0


def test_fd_check_quadratic_exact():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    theta = {"x": np.array([0.3, -1.2]), "c": np.array(4.0)}
    fn = lambda p: float(p["x"] @ A @ p["x"] + p["c"] ** 2)
    grads = {"x": 2 * A @ theta["x"], "c": np.array(8.0)}
    res = finite_difference_check(fn, theta, grads)
    assert res.max_relative_error < 1e-8
    assert res.n_checked == 3
    assert set(res.by_group) == {"x", "c"}


def test_fd_check_independent_parameter_zero_both_sides():
    fn = lambda p: float(p["a"][0] ** 2)
    res = finite_difference_check(fn, {"a": np.array([1.0]), "b": np.array([2.0])},
                                  {"a": np.array([2.0]), "b": np.array([0.0])})
    assert res.by_group["b"] == 0.0


def test_fd_check_detects_wrong_gradient():
    fn = lambda p: float(np.sum(p["a"] ** 2))
    res = finite_difference_check(fn, {"a": np.array([1.0, 2.0])}, {"a": np.array([2.0, 4.1])})
    assert not res.passed(1e-4)
    assert res.worst[0] == "a"


def test_fd_check_errors():
    with pytest.raises(ConfigurationError):
        finite_difference_check(lambda p: 0.0, {"a": np.zeros(1)}, {"a": np.zeros(1)}, step=0)
    with pytest.raises(NumericalError):
        finite_difference_check(lambda p: float("nan"), {"a": np.zeros(1)}, {"a": np.zeros(1)})
    with pytest.raises(ConfigurationError):
        finite_difference_check(lambda p: 0.0, {"a": np.zeros(2)}, {"a": np.zeros(3)})


def test_fd_check_leaves_inputs_untouched():
    theta = {"a": np.array([1.0, 2.0])}
    finite_difference_check(lambda p: float(np.sum(p["a"] ** 2)), theta, {"a": 2 * theta["a"]})
    np.testing.assert_array_equal(theta["a"], [1.0, 2.0])
