"""Exact-value and algebraic checks for the autodiff core."""

import numpy as np
import pytest

from touchlab import diffcore as dc
from touchlab.errors import ConfigurationError, InputError, TrainingError


def test_tensor_wraps_float64():
    t = dc.Tensor([1, 2, 3])
    assert t.data.dtype == np.float64
    assert t.shape == (3,)


def test_graph_values_match_numpy():
    rng = np.random.default_rng(0)
    a = dc.Tensor(rng.normal(size=(4, 5)))
    w = dc.Tensor(rng.normal(size=(5, 3)))
    b = dc.Tensor(rng.normal(size=(3,)))
    out = dc.add(dc.matmul(a, w), b)
    assert np.allclose(out.data, a.data @ w.data + b.data)


def test_backward_requires_scalar():
    t = dc.Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ConfigurationError):
        dc.relu(t).backward()


def test_matmul_shape_errors():
    a = dc.Tensor(np.ones((2, 3)))
    b = dc.Tensor(np.ones((4, 2)))
    with pytest.raises(ConfigurationError):
        dc.matmul(a, b)


def test_no_grad_builds_no_graph():
    x = dc.Tensor(np.ones(3), requires_grad=True)
    with dc.no_grad():
        y = dc.relu(x)
    assert not y.requires_grad
    assert y._backward is None


def test_grad_accumulates_across_reuse():
    # x used twice: d(x*x + x)/dx at x=3 is 2*3 + 1 = 7.
    x = dc.Tensor(3.0, requires_grad=True)
    y = dc.add(dc.mul(x, x), x)
    y.backward()
    assert np.allclose(x.grad, 7.0)


def test_crelu_exact_values():
    x = dc.Tensor(np.array([[2.0, -3.0]]))
    out = dc.crelu(x)
    assert np.array_equal(out.data, [[2.0, 0.0, 0.0, 3.0]])


def test_sq_exact_values():
    x = dc.Tensor(np.array([[2.0, -3.0]]))
    out = dc.sq(x)
    assert np.array_equal(out.data, [[2.0, -3.0, 4.0, 9.0]])


def test_relu_sq_exact_values():
    # The no-sign-symmetry activation: [2, -3] -> [2, 0, 4, 9].
    x = dc.Tensor(np.array([[2.0, -3.0]]))
    out = dc.relu_sq(x)
    assert np.array_equal(out.data, [[2.0, 0.0, 4.0, 9.0]])


def test_cres_equals_sq_of_crelu():
    rng = np.random.default_rng(1)
    x = dc.Tensor(rng.normal(size=(3, 7)))
    a = dc.cres(x)
    b = dc.sq(dc.crelu(dc.Tensor(x.data)))
    assert np.array_equal(a.data, b.data)
    assert a.shape == (3, 28)


def test_width_factors():
    assert dc.WIDTH_FACTOR["crelu"] == 2
    assert dc.WIDTH_FACTOR["sq"] == 2
    assert dc.WIDTH_FACTOR["cres"] == 4
    assert dc.WIDTH_FACTOR["relu"] == 1


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(2)
    x = dc.Tensor(rng.normal(scale=30.0, size=(8, 5)))
    p = dc.softmax(x)
    assert np.allclose(p.data.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(p.data >= 0.0)


def test_sigmoid_cross_entropy_exact():
    # CE(z=0, t=0.5) = log 2; CE(z, t=1) = log(1 + e^-z).
    z = dc.Tensor(np.array([0.0, 3.0]))
    out = dc.sigmoid_cross_entropy(z, np.array([0.5, 1.0]))
    assert np.allclose(out.data, [np.log(2.0), np.log1p(np.exp(-3.0))])


def test_sigmoid_cross_entropy_large_logits_finite():
    z = dc.Tensor(np.array([500.0, -500.0]))
    out = dc.sigmoid_cross_entropy(z, np.array([1.0, 0.0]))
    assert np.all(np.isfinite(out.data))
    assert np.allclose(out.data, 0.0, atol=1e-12)


def test_sigmoid_cross_entropy_target_domain():
    z = dc.Tensor(np.zeros(2))
    with pytest.raises(InputError):
        dc.sigmoid_cross_entropy(z, np.array([0.5, 1.2]))


def test_softmax_cross_entropy_matches_log_rule():
    rng = np.random.default_rng(3)
    logits = dc.Tensor(rng.normal(size=(6, 4)))
    labels = rng.integers(0, 4, size=6)
    out = dc.softmax_cross_entropy(logits, labels)
    p = np.exp(logits.data) / np.exp(logits.data).sum(axis=1, keepdims=True)
    assert np.allclose(out.data, -np.log(p[np.arange(6), labels]))


def test_unitwise_linear_matches_einsum():
    rng = np.random.default_rng(4)
    u = dc.Tensor(rng.normal(size=(5, 3, 2)))
    w = dc.Tensor(rng.normal(size=(3, 2, 2)))
    b = dc.Tensor(rng.normal(size=(3, 2)))
    out = dc.unitwise_linear(u, w, b)
    ref = np.einsum("blo,low->blw", u.data, w.data) + b.data
    assert np.allclose(out.data, ref)


def test_tile_rows_backward_sums():
    x = dc.Tensor(np.array([[1.0, 2.0]]), requires_grad=True)
    y = dc.t_sum(dc.tile_rows(x, 4))
    y.backward()
    assert np.array_equal(x.grad, [[4.0, 4.0]])


def test_adam_first_step_is_lr_sized():
    # With g=1 the bias-corrected first step is lr * 1/(1+eps) ~= lr.
    p = dc.Parameter(np.array([0.0]), "w")
    opt = dc.Adam([([p], 1e-3)])
    p.tensor.grad = np.array([1.0])
    opt.step()
    assert np.allclose(p.data, [-1e-3], atol=1e-9)


def test_adam_matches_reference_sequence():
    # Oracle: an independent scalar Adam recursion on f(w) = 0.5 w^2.
    p = dc.Parameter(np.array([1.0]), "w")
    opt = dc.Adam([([p], 0.1)])
    w_ref, m, v = 1.0, 0.0, 0.0
    for t in range(1, 6):
        g = w_ref
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w_ref -= 0.1 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        p.tensor.grad = p.data.copy()
        opt.step()
        assert np.allclose(p.data, [w_ref], atol=1e-12)


def test_adam_skips_frozen_parameters():
    p = dc.Parameter(np.array([1.0, 2.0]), "w")
    opt = dc.Adam([([p], 1e-2)])
    p.freeze()
    p.tensor.grad = np.ones(2)
    opt.step()
    assert np.array_equal(p.data, [1.0, 2.0])


def test_adam_rejects_nonfinite_gradient():
    p = dc.Parameter(np.array([1.0]), "bad_param")
    opt = dc.Adam([([p], 1e-2)])
    p.tensor.grad = np.array([np.nan])
    with pytest.raises(TrainingError, match="bad_param"):
        opt.step()


def test_adam_group_learning_rates_differ():
    a = dc.Parameter(np.array([0.0]), "a")
    b = dc.Parameter(np.array([0.0]), "b")
    opt = dc.Adam([([a], 1e-3), ([b], 1e-1)])
    a.tensor.grad = np.array([1.0])
    b.tensor.grad = np.array([1.0])
    opt.step()
    assert abs(a.data[0]) < abs(b.data[0])


def test_adam_rejects_duplicate_parameter():
    p = dc.Parameter(np.array([0.0]), "p")
    with pytest.raises(ConfigurationError):
        dc.Adam([([p], 1e-3), ([p], 1e-2)])


def test_training_then_freeze_keeps_values_fixed():
    rng = np.random.default_rng(5)
    w = dc.Parameter(rng.normal(size=(3, 2)), "w")
    opt = dc.Adam([([w], 1e-2)])
    x = dc.Tensor(rng.normal(size=(4, 3)))
    loss = dc.t_mean(dc.square(dc.matmul(x, w.tensor)))
    loss.backward()
    opt.step()
    snapshot = w.data.copy()
    w.freeze()
    loss = dc.t_mean(dc.square(dc.matmul(x, w.tensor)))
    # Frozen leaves no longer require grad, so backward leaves them untouched.
    assert not loss.requires_grad or w.tensor.grad is None
    opt.step()
    assert np.array_equal(w.data, snapshot)
