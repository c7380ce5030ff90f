import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamcast import autodiff as ad
from helpers import central_difference, relative_error, scalar_lstm


# --------------------------------------------------------------------------
# forward values


def test_forward_examples():
    g = ad.Graph()
    zero = g.const(np.zeros(3))
    assert np.all(ad.tanh(zero).value == 0.0)
    assert ad.softplus(zero).value[0] == pytest.approx(math.log(2), abs=1e-15)
    A = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(ad.matmul(g.const(np.eye(2)), g.const(A)).value, A)


def test_shape_mismatch_reports_both_shapes():
    g = ad.Graph()
    with pytest.raises(ad.ShapeError) as exc:
        ad.matmul(g.const(np.zeros((2, 3))), g.const(np.zeros((4, 5))))
    assert "(2, 3)" in str(exc.value) and "(4, 5)" in str(exc.value)
    with pytest.raises(ad.ShapeError):
        ad.add(g.const(np.zeros((2, 3))), g.const(np.zeros((3, 2))))


def test_rank_above_three_rejected():
    with pytest.raises(ad.ShapeError):
        ad.Graph().const(np.zeros((1, 1, 1, 1)))


# --------------------------------------------------------------------------
# backward


def test_square_sum_gradient():
    g = ad.Graph()
    x = g.param("x", np.array([1.0, 2.0]))
    grads = ad.backward(g, ad.sum(x * x))
    assert np.array_equal(grads["x"], [2.0, 4.0])


def test_non_scalar_loss_rejected():
    g = ad.Graph()
    x = g.param("x", np.ones(3))
    with pytest.raises(ValueError):
        ad.backward(g, x * x)


def test_disconnected_parameter_has_exact_zero_gradient():
    g = ad.Graph()
    x = g.param("x", np.ones(3))
    unused = g.param("unused", np.ones((2, 2)))
    grads = ad.backward(g, ad.sum(ad.tanh(x)))
    assert np.array_equal(grads["unused"], np.zeros((2, 2)))


def test_shared_node_gradients_accumulate():
    g = ad.Graph()
    x = g.param("x", np.array([3.0]))
    y = x * x
    grads = ad.backward(g, ad.sum(y + y))
    assert grads["x"][0] == pytest.approx(12.0)


UNARY = {
    "sigmoid": ad.sigmoid,
    "tanh": ad.tanh,
    "softplus": ad.softplus,
    "exp": ad.exp,
    "relu": ad.relu,
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_gradients_match_finite_differences(name, rng):
    values = rng.normal(size=(3, 4))
    values[np.abs(values) < 1e-3] = 0.5  # keep relu off its kink

    def loss_value():
        g = ad.Graph()
        return float(ad.sum(UNARY[name](g.const(values)) * g.const(weights)).value)

    weights = rng.normal(size=(3, 4))
    g = ad.Graph()
    x = g.param("x", values)
    grads = ad.backward(g, ad.sum(UNARY[name](x) * g.const(weights)))
    assert relative_error(grads["x"], central_difference(loss_value, values)) < 1e-6


def test_log_and_reciprocal_gradients(rng):
    values = rng.uniform(0.5, 2.0, size=5)

    def f():
        g = ad.Graph()
        return float(ad.sum(ad.log(g.const(values)) + ad.reciprocal(g.const(values))).value)

    g = ad.Graph()
    x = g.param("x", values)
    grads = ad.backward(g, ad.sum(ad.log(x) + ad.reciprocal(x)))
    assert relative_error(grads["x"], central_difference(f, values)) < 1e-7


def test_clip_passes_gradient_only_inside(rng):
    g = ad.Graph()
    x = g.param("x", np.array([-2.0, 0.5, 3.0]))
    grads = ad.backward(g, ad.sum(ad.clip(x, lo=0.0, hi=1.0)))
    assert np.array_equal(grads["x"], [0.0, 1.0, 0.0])


def test_take_concat_reshape_mean_gradients(rng):
    A = rng.normal(size=(2, 3, 4))
    B = rng.normal(size=(2, 3, 2))

    def build(g, a, b):
        c = ad.concat([a, b], axis=2)  # (2, 3, 6)
        s = c[:, 1:, ::2]  # (2, 2, 3)
        r = ad.reshape(s, (4, 3))
        return ad.mean(ad.tanh(r) * r) + ad.sum(ad.mean(c, axis=0))

    def f():
        g = ad.Graph()
        return float(build(g, g.const(A), g.const(B)).value)

    g = ad.Graph()
    a, b = g.param("a", A), g.param("b", B)
    grads = ad.backward(g, build(g, a, b))
    assert relative_error(grads["a"], central_difference(f, A)) < 1e-7
    assert relative_error(grads["b"], central_difference(f, B)) < 1e-7


def test_broadcast_add_and_mul_gradients(rng):
    M = rng.normal(size=(4, 3))
    v = rng.normal(size=3)

    def build(g, m, w):
        return ad.sum(ad.tanh(m + w) * w - m)

    def f():
        g = ad.Graph()
        return float(build(g, g.const(M), g.const(v)).value)

    g = ad.Graph()
    grads = ad.backward(g, build(g, g.param("m", M), g.param("v", v)))
    assert grads["v"].shape == (3,)
    assert relative_error(grads["m"], central_difference(f, M)) < 1e-7
    assert relative_error(grads["v"], central_difference(f, v)) < 1e-7


@settings(max_examples=30)
@given(seed=st.integers(0, 2**31 - 1))
def test_two_layer_tanh_net_gradients(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(5, 3))
    W1, b1 = r.normal(size=(3, 4)), r.normal(size=4)
    W2, b2 = r.normal(size=(4, 2)), r.normal(size=2)
    params = {"W1": W1, "b1": b1, "W2": W2, "b2": b2}

    def build(g, P):
        hidden = ad.tanh(ad.matmul(g.const(X), P["W1"]) + P["b1"])
        out = ad.matmul(hidden, P["W2"]) + P["b2"]
        return ad.mean(out * out)

    def f():
        g = ad.Graph()
        return float(build(g, {k: g.const(v) for k, v in params.items()}).value)

    g = ad.Graph()
    grads = ad.backward(g, build(g, {k: g.param(k, v) for k, v in params.items()}))
    for k, v in params.items():
        assert relative_error(grads[k], central_difference(f, v)) <= 1e-4


# --------------------------------------------------------------------------
# LSTM


def _lstm_inputs(r, B=2, T=5, F=3, H=4):
    return (
        r.normal(size=(B, T, F)),
        r.normal(scale=0.5, size=(F, 4 * H)),
        r.normal(scale=0.5, size=(H, 4 * H)),
        r.normal(scale=0.5, size=4 * H),
        r.normal(scale=0.5, size=(B, H)),
        r.normal(scale=0.5, size=(B, H)),
    )


def test_lstm_matches_scalar_oracle(rng):
    x, wi, wh, b, h0, c0 = _lstm_inputs(rng)
    g = ad.Graph()
    out = ad.lstm(g.const(x), g.const(wi), g.const(wh), g.const(b), g.const(h0), g.const(c0)).value
    H = wh.shape[0]
    for n in range(x.shape[0]):
        hs, cs = scalar_lstm(x[n], wi, wh, b, h0[n], c0[n])
        np.testing.assert_allclose(out[n, :, :H], hs, rtol=0, atol=1e-13)
        np.testing.assert_allclose(out[n, :, H:], cs, rtol=0, atol=1e-13)


@settings(max_examples=25)
@given(seed=st.integers(0, 2**31 - 1))
def test_lstm_gradients_match_finite_differences(seed):
    r = np.random.default_rng(seed)
    arrays = dict(zip(["x", "wi", "wh", "b", "h0", "c0"], _lstm_inputs(r, T=4, H=3)))
    probe = r.normal(size=(2, 4, 6))

    def build(g, t):
        out = ad.lstm(t["x"], t["wi"], t["wh"], t["b"], t["h0"], t["c0"])
        return ad.sum(out * g.const(probe))

    def f():
        g = ad.Graph()
        return float(build(g, {k: g.const(v) for k, v in arrays.items()}).value)

    g = ad.Graph()
    grads = ad.backward(g, build(g, {k: g.param(k, v) for k, v in arrays.items()}))
    for k, v in arrays.items():
        assert relative_error(grads[k], central_difference(f, v)) <= 1e-4, k


def test_lstm_shape_errors(rng):
    x, wi, wh, b, h0, c0 = _lstm_inputs(rng)
    g = ad.Graph()
    with pytest.raises(ad.ShapeError):
        ad.lstm(g.const(x[0]), g.const(wi), g.const(wh), g.const(b), g.const(h0), g.const(c0))
    with pytest.raises(ad.ShapeError):
        ad.lstm(g.const(x), g.const(wi[:-1]), g.const(wh), g.const(b), g.const(h0), g.const(c0))


def test_backward_is_deterministic(rng):
    arrays = _lstm_inputs(rng)

    def run():
        g = ad.Graph()
        ps = [g.param(str(i), a) for i, a in enumerate(arrays)]
        loss = ad.mean(ad.tanh(ad.lstm(*ps)))
        return loss.value, ad.backward(g, loss)

    (l1, g1), (l2, g2) = run(), run()
    assert l1 == l2
    for k in g1:
        assert np.array_equal(g1[k], g2[k])
