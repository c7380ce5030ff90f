"""Numeric oracles shared by the test modules."""

import math

import numpy as np


def central_difference(f, x, h=1e-6):
    """Numeric gradient of scalar ``f`` at array ``x`` (perturbs ``x`` in place, restores it)."""
    grad = np.zeros_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f()
        flat[i] = old - h
        down = f()
        flat[i] = old
        gflat[i] = (up - down) / (2 * h)
    return grad


def relative_error(a, b):
    """Norm-wise relative error, robust to entries that are nearly zero."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)


def scalar_lstm(x, w_ih, w_hh, b, h0, c0):
    """Straight-line LSTM over one sequence, written cell by cell with math.* only."""
    T, F = x.shape
    H = w_hh.shape[0]
    h, c = list(h0), list(c0)
    hs, cs = [], []

    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    for t in range(T):
        z = []
        for j in range(4 * H):
            acc = b[j]
            for f in range(F):
                acc += x[t, f] * w_ih[f, j]
            for k in range(H):
                acc += h[k] * w_hh[k, j]
            z.append(acc)
        new_h, new_c = [], []
        for k in range(H):
            i = sig(z[k])
            fg = sig(z[H + k])
            g = math.tanh(z[2 * H + k])
            o = sig(z[3 * H + k])
            ck = fg * c[k] + i * g
            new_c.append(ck)
            new_h.append(o * math.tanh(ck))
        h, c = new_h, new_c
        hs.append(h)
        cs.append(c)
    return np.array(hs), np.array(cs)


def model_gradient_error(seed, hidden=4, hindcast=10, n_hindcast=5, n_forecast=3, batch=3, shared_head=True, h=1e-5):
    """Largest per-parameter relative error between tape and central-difference NLL gradients."""
    from streamcast.model import ForecastModelState, ModelConfig, init_params, loss_and_grads, nll_loss, predict_params

    r = np.random.default_rng(seed)
    config = ModelConfig(hindcast_length=hindcast, hidden_size=hidden, n_hindcast_features=n_hindcast,
                         n_forecast_features=n_forecast, shared_head=shared_head)
    state = ForecastModelState(config, init_params(config, r))
    xh = r.normal(size=(batch, hindcast, n_hindcast))
    xf = r.normal(size=(batch, 8, n_forecast))
    y = r.normal(size=(batch, 8))
    mask = r.random((batch, 8)) < 0.85
    mask[0, 0] = True
    _, grads = loss_and_grads(state, xh, xf, y, mask)

    def loss():
        mu, b, tau = predict_params(state, xh, xf)
        return nll_loss(mu, b, tau, y, mask)

    return max(relative_error(grads[k], central_difference(loss, v, h)) for k, v in state.params.items())


def brute_force_max_matching(pred, obs, window=2):
    """Largest one-to-one pairing with |days| <= window, by exhaustive search with memoisation."""
    from functools import lru_cache

    pred, obs = list(pred), list(obs)

    @lru_cache(maxsize=None)
    def best(j, used):
        if j == len(obs):
            return 0
        out = best(j + 1, used)  # leave obs[j] unmatched
        for i, p in enumerate(pred):
            if not used >> i & 1 and abs(p - obs[j]) <= window:
                out = max(out, 1 + best(j + 1, used | 1 << i))
        return out

    return best(0, 0)


def crossings_by_loop(flow, threshold):
    """Upward threshold crossings found with a plain loop; NaN counts as below."""
    events, prev = [], False
    for k, v in enumerate(flow):
        above = (not math.isnan(v)) and v >= threshold
        if above and not prev:
            events.append(k)
        prev = above
    return events
