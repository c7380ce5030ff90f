"""Encoder/decoder LSTM forecaster with an asymmetric Laplace output head.

An encoder LSTM reads the hindcast window; its final cell state passes
through an affine map and its final hidden state through a tanh layer to
seed a decoder LSTM that steps over the eight forecast days (lead 0 to 7).
At every decoder step a linear head emits location, scale and asymmetry of
an asymmetric Laplace distribution over standardized discharge. Training
minimizes the mean negative log-likelihood over observed targets; point
forecasts are distribution medians averaged over an ensemble of
independently seeded members.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator

from . import autodiff as ad
from .dataset import HORIZON, ForecastDataset, Preprocessor, date_mask
from .distributions import ald_median, ald_nll, ald_nll_tensor

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

# Published full-scale settings, kept for reference; desk-scale defaults are below.
PAPER_HINDCAST_LENGTH = 365
PAPER_HIDDEN_SIZE = 256
PAPER_BATCH_SIZE = 256
PAPER_TRAINING_STEPS = 50_000
PAPER_VALIDATE_EVERY = 1_000
PAPER_ENSEMBLE_SIZE = 3

SCALE_FLOOR = 1e-6
TAU_BOUNDS = (1e-4, 1 - 1e-4)


class TrainingDivergedError(RuntimeError):
    def __init__(self, step, last_finite_loss):
        self.step = step
        self.last_finite_loss = last_finite_loss
        super().__init__(
            f"loss became non-finite at step {step}; last finite loss {last_finite_loss}"
        )


class NonFiniteOutputError(FloatingPointError):
    def __init__(self, step):
        self.step = step
        super().__init__(f"non-finite density parameter at decoder step {step}")


@dataclass
class ModelConfig:
    hindcast_length: int = PAPER_HINDCAST_LENGTH
    horizon: int = HORIZON
    hidden_size: int = 32
    n_hindcast_features: int = 0
    n_forecast_features: int = 0
    batch_size: int = 16
    training_steps: int = 2_000
    learning_rate: float = 1e-3
    lr_schedule: str = "cosine"
    clip_norm: float = 1.0
    statics_in_decoder: bool = True
    shared_head: bool = True
    validate_every: int = PAPER_VALIDATE_EVERY
    seed: int = 0

    def __post_init__(self):
        if self.hindcast_length < 1:
            raise ValueError("hindcast_length must be >= 1")
        if self.horizon != HORIZON:
            raise ValueError(f"horizon must be {HORIZON} steps (lead 0..7)")
        if self.hidden_size < 1:
            raise ValueError("hidden_size must be >= 1")
        if self.lr_schedule not in ("cosine", "constant"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class ForecastModelState:
    config: ModelConfig
    params: dict
    loss_trace: list = field(default_factory=list)
    validation_trace: list = field(default_factory=list)

    def copy(self):
        return ForecastModelState(
            self.config,
            {k: v.copy() for k, v in self.params.items()},
            list(self.loss_trace),
            list(self.validation_trace),
        )


# --------------------------------------------------------------------------
# parameters


def init_params(config: ModelConfig, rng: np.random.Generator) -> dict:
    """Uniform(-1/sqrt(H), 1/sqrt(H)) for every weight and bias."""
    H = config.hidden_size
    bound = 1.0 / math.sqrt(H)

    def u(*shape):
        return rng.uniform(-bound, bound, size=shape)

    p = {
        "enc_w_ih": u(config.n_hindcast_features, 4 * H),
        "enc_w_hh": u(H, 4 * H),
        "enc_b": u(4 * H),
        "dec_w_ih": u(config.n_forecast_features, 4 * H),
        "dec_w_hh": u(H, 4 * H),
        "dec_b": u(4 * H),
        "cell_w": u(H, H),
        "cell_b": u(H),
        "hidden_w": u(H, H),
        "hidden_b": u(H),
    }
    if config.shared_head:
        p["head_w"] = u(H, 3)
        p["head_b"] = u(3)
    else:
        p["head_w"] = u(config.horizon, H, 3)
        p["head_b"] = u(config.horizon, 3)
    return p


def _bind(graph: ad.Graph, params: dict) -> dict:
    return {k: graph.param(k, v) for k, v in params.items()}


# --------------------------------------------------------------------------
# network pieces (each usable on its own graph)


def encoder(P, xh: np.ndarray | ad.Tensor):
    """Final (cell, hidden) states of the encoder over a (B, T, F) hindcast."""
    g = P["enc_w_hh"].graph
    B = xh.shape[0]
    H = P["enc_w_hh"].shape[0]
    zeros = np.zeros((B, H))
    out = ad.lstm(xh, P["enc_w_ih"], P["enc_w_hh"], P["enc_b"], g.const(zeros), g.const(zeros))
    last = out[:, -1, :]
    return last[:, H:], last[:, :H]


def transfer(P, c, h):
    c0 = ad.add(ad.matmul(c, P["cell_w"]), P["cell_b"])
    h0 = ad.tanh(ad.add(ad.matmul(h, P["hidden_w"]), P["hidden_b"]))
    return c0, h0


def head(P, hs, shared=True):
    """Density parameters (mu, b, tau), each (B, horizon), from decoder outputs (B, horizon, H)."""
    B, T, H = hs.shape
    if shared:
        z = ad.add(ad.matmul(ad.reshape(hs, (B * T, H)), P["head_w"]), P["head_b"])
        z = ad.reshape(z, (B, T, 3))
    else:
        steps = [
            ad.reshape(ad.add(ad.matmul(hs[:, t, :], P["head_w"][t]), P["head_b"][t]), (B, 1, 3))
            for t in range(T)
        ]
        z = ad.concat(steps, axis=1)
    mu = z[:, :, 0]
    b = ad.clip(ad.softplus(z[:, :, 1]), lo=SCALE_FLOOR)
    tau = ad.clip(ad.sigmoid(z[:, :, 2]), *TAU_BOUNDS)
    return mu, b, tau


def decoder(P, c0, h0, xf, shared=True):
    H = P["dec_w_hh"].shape[0]
    out = ad.lstm(xf, P["dec_w_ih"], P["dec_w_hh"], P["dec_b"], h0, c0)
    return head(P, out[:, :, :H], shared=shared)


def forward(config: ModelConfig, P, xh, xf):
    c, h = encoder(P, xh)
    c0, h0 = transfer(P, c, h)
    return decoder(P, c0, h0, xf, shared=config.shared_head)


def _check_inputs(xh, xf):
    if not np.all(np.isfinite(xh)) or not np.all(np.isfinite(xf)):
        raise ValueError("model inputs contain NaN or inf; impute before running the model")


# numpy conveniences wrapping the pieces above on a throwaway graph


def run_encoder(params, xh, statics=None):
    """Final encoder (c, h). ``statics``, if given, is appended to every timestep."""
    xh = np.asarray(xh, dtype=float)
    squeeze = xh.ndim == 2
    if squeeze:
        xh = xh[None]
    if statics is not None:
        s = np.atleast_2d(np.asarray(statics, dtype=float))
        s = np.broadcast_to(s[:, None, :], (xh.shape[0], xh.shape[1], s.shape[-1]))
        xh = np.concatenate([xh, s], axis=2)
    _check_inputs(xh, np.zeros(1))
    g = ad.Graph()
    c, h = encoder(_bind(g, params), g.const(xh))
    c, h = c.value, h.value
    return (c[0], h[0]) if squeeze else (c, h)


def transfer_state(params, c, h):
    g = ad.Graph()
    P = _bind(g, params)
    c0, h0 = transfer(P, g.const(np.atleast_2d(c)), g.const(np.atleast_2d(h)))
    if np.ndim(c) == 1:
        return c0.value[0], h0.value[0]
    return c0.value, h0.value


def run_decoder(params, c0, h0, xf, shared_head=True):
    """(mu, b, tau) arrays of shape (horizon,) or (B, horizon)."""
    xf = np.asarray(xf, dtype=float)
    _check_inputs(np.zeros(1), xf)
    squeeze = xf.ndim == 2
    if squeeze:
        xf, c0, h0 = xf[None], np.atleast_2d(c0), np.atleast_2d(h0)
    g = ad.Graph()
    P = _bind(g, params)
    mu, b, tau = decoder(P, g.const(c0), g.const(h0), g.const(xf), shared=shared_head)
    out = [mu.value, b.value, tau.value]
    for t in range(out[0].shape[1]):
        if not all(np.all(np.isfinite(a[:, t])) for a in out):
            raise NonFiniteOutputError(t)
    return tuple(a[0] for a in out) if squeeze else tuple(out)


def predict_params(state: ForecastModelState, xh, xf):
    _check_inputs(xh, xf)
    g = ad.Graph()
    P = _bind(g, state.params)
    mu, b, tau = forward(state.config, P, g.const(xh), g.const(xf))
    return mu.value, b.value, tau.value


def nll_loss(mu, b, tau, y, mask):
    """Mean asymmetric-Laplace NLL over unmasked (sample, lead) pairs (numpy in, float out)."""
    return ald_nll(y, mu, b, tau, mask)


def loss_and_grads(state: ForecastModelState, xh, xf, y, mask):
    g = ad.Graph()
    P = _bind(g, state.params)
    mu, b, tau = forward(state.config, P, g.const(xh), g.const(xf))
    loss = ald_nll_tensor(y, mu, b, tau, mask)
    grads = ad.backward(g, loss)
    return float(loss.value), grads


# --------------------------------------------------------------------------
# optimisation


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m, self.v, self.t = {}, {}, 0

    def step(self, params, grads, lr=None):
        lr = self.lr if lr is None else lr
        self.t += 1
        for k, g in grads.items():
            m = self.m.get(k, 0.0) * self.beta1 + (1 - self.beta1) * g
            v = self.v.get(k, 0.0) * self.beta2 + (1 - self.beta2) * g * g
            self.m[k], self.v[k] = m, v
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            params[k] = params[k] - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def clip_global_norm(grads, max_norm):
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm is None or max_norm <= 0 or total <= max_norm:
        return grads, total
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}, total


def learning_rate_at(config: ModelConfig, step: int) -> float:
    if config.lr_schedule == "constant" or config.training_steps <= 1:
        return config.learning_rate
    frac = step / config.training_steps
    return config.learning_rate * 0.5 * (1.0 + math.cos(math.pi * frac))


def mean_nll(state: ForecastModelState, dataset: ForecastDataset, rows, chunk=256) -> float:
    total, count = 0.0, 0
    for start in range(0, len(rows), chunk):
        xh, xf, y, m = dataset.batch(rows[start : start + chunk])
        mu, b, tau = predict_params(state, xh, xf)
        n = int(m.sum())
        if n:
            total += nll_loss(mu, b, tau, y, m) * n
            count += n
    if not count:
        raise ValueError("no training signal: every target is masked")
    return total / count


def train(dataset: ForecastDataset, config: ModelConfig, seed=None,
          validation: ForecastDataset | None = None, n_validation_samples=512) -> ForecastModelState:
    """Fit one ensemble member by minibatch Adam on the asymmetric-Laplace NLL.

    Samples are drawn uniformly with replacement from the dataset's
    (basin, issue day) index. If ``validation`` is given its mean NLL on a
    fixed subsample is logged every ``config.validate_every`` steps.
    """
    seed = config.seed if seed is None else seed
    if len(dataset) == 0:
        raise ValueError("dataset has no valid forecast issue days")
    if config.n_hindcast_features != dataset.n_hindcast_features or config.n_forecast_features != dataset.n_forecast_features:
        raise ValueError("config feature counts do not match the dataset")
    rng = np.random.default_rng(seed)
    state = ForecastModelState(config, init_params(config, rng))
    opt = Adam(lr=config.learning_rate)
    val_rows = None
    if validation is not None and len(validation):
        vrng = np.random.default_rng(seed + 1)
        val_rows = vrng.choice(len(validation), size=min(n_validation_samples, len(validation)), replace=False)
    last_finite = None
    for step in range(config.training_steps):
        rows = rng.integers(0, len(dataset), size=config.batch_size)
        xh, xf, y, m = dataset.batch(rows)
        if not m.any():
            continue
        loss, grads = loss_and_grads(state, xh, xf, y, m)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise TrainingDivergedError(step, last_finite)
        last_finite = loss
        state.loss_trace.append(loss)
        grads, _ = clip_global_norm(grads, config.clip_norm)
        opt.step(state.params, grads, lr=learning_rate_at(config, step))
        if val_rows is not None and config.validate_every and (step + 1) % config.validate_every == 0:
            v = mean_nll(state, validation, val_rows)
            state.validation_trace.append((step + 1, v))
            logger.info("step %d train %.4f validation %.4f", step + 1, loss, v)
    for k, v in state.params.items():
        if not np.all(np.isfinite(v)):
            raise TrainingDivergedError(config.training_steps, last_finite)
    return state


# --------------------------------------------------------------------------
# prediction


def predict_median(state: ForecastModelState, dataset: ForecastDataset, basin_index, positions, chunk=256):
    """Median forecasts (len(positions), horizon) in mm/day."""
    pre = dataset.preprocessor
    out = []
    for start in range(0, len(positions), chunk):
        xh, xf = dataset.issue_inputs(basin_index, positions[start : start + chunk])
        mu, b, tau = predict_params(state, xh, xf)
        out.append(pre.destandardize_target(ald_median(mu, b, tau)))
    if not out:
        return np.empty((0, HORIZON))
    return np.vstack(out)


def issue_positions(dataset: ForecastDataset, basin_index, issue_dates=None):
    b = dataset.basins[basin_index]
    th = dataset.hindcast_length
    valid = np.arange(th, len(b.dates) - HORIZON + 1)
    if issue_dates is None:
        return valid
    pos = b.dates.get_indexer(pd.DatetimeIndex(issue_dates))
    bad = (pos < th) | (pos > len(b.dates) - HORIZON)
    if np.any(bad):
        raise ValueError(f"gauge {b.gauge_id}: issue dates lack a full hindcast or forecast window")
    return pos


def ensemble_mean(member_forecasts):
    """Elementwise arithmetic mean of member median hydrographs."""
    stack = np.stack([np.asarray(m, dtype=float) for m in member_forecasts])
    return stack.mean(axis=0)


def forecast_frame(gauge_id, dates, positions, q):
    issue = dates[positions]
    n = len(positions)
    return pd.DataFrame(
        {
            "gauge_id": np.repeat(gauge_id, n * HORIZON),
            "issue_date": np.repeat(issue.strftime("%Y-%m-%d"), HORIZON),
            "lead_days": np.tile(np.arange(HORIZON), n),
            "q_pred_mmday": np.asarray(q).reshape(-1),
        }
    )


def predict_ensemble(members, dataset: ForecastDataset, issue_dates=None, n_members=PAPER_ENSEMBLE_SIZE):
    """Prediction archive rows for every basin in ``dataset``.

    Each member's median hydrograph is de-standardized to mm/day, floored at
    zero, and the ensemble forecast is their elementwise mean.
    """
    if len(members) != n_members:
        raise ValueError(f"expected {n_members} ensemble members, got {len(members)}")
    frames = []
    for bi, b in enumerate(dataset.basins):
        dates = None if issue_dates is None else issue_dates.get(b.gauge_id) if isinstance(issue_dates, dict) else issue_dates
        pos = issue_positions(dataset, bi, dates)
        per_member = [np.maximum(predict_median(m, dataset, bi, pos), 0.0) for m in members]
        frames.append(forecast_frame(b.gauge_id, b.dates, pos, ensemble_mean(per_member)))
    if not frames:
        return pd.DataFrame(columns=["gauge_id", "issue_date", "lead_days", "q_pred_mmday"])
    return pd.concat(frames, ignore_index=True)


# --------------------------------------------------------------------------
# checkpoints


def state_to_dict(state: ForecastModelState, preprocessor: Preprocessor | None = None) -> dict:
    d = {
        "format": "streamcast-checkpoint",
        "version": CHECKPOINT_VERSION,
        "config": asdict(state.config),
        "params": {k: {"shape": list(v.shape), "values": v.reshape(-1).tolist()} for k, v in state.params.items()},
        "loss_trace": state.loss_trace,
        "validation_trace": [list(x) for x in state.validation_trace],
    }
    if preprocessor is not None:
        d["preprocessing"] = preprocessor.to_dict()
    return d


def state_from_dict(d):
    if d.get("format") != "streamcast-checkpoint":
        raise ValueError("not a streamcast checkpoint")
    if d.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {d.get('version')}")
    config = ModelConfig.from_dict(d["config"])
    params = {k: np.asarray(v["values"], dtype=float).reshape(v["shape"]) for k, v in d["params"].items()}
    state = ForecastModelState(config, params, list(d.get("loss_trace", [])),
                               [tuple(x) for x in d.get("validation_trace", [])])
    pre = Preprocessor.from_dict(d["preprocessing"]) if "preprocessing" in d else None
    return state, pre


def save_checkpoint(path, states, preprocessor):
    payload = {
        "format": "streamcast-ensemble",
        "version": CHECKPOINT_VERSION,
        "members": [state_to_dict(s) for s in states],
        "preprocessing": preprocessor.to_dict(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path):
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != "streamcast-ensemble":
        raise ValueError(f"{path}: not a streamcast ensemble checkpoint")
    states = [state_from_dict(m)[0] for m in payload["members"]]
    return states, Preprocessor.from_dict(payload["preprocessing"])


# --------------------------------------------------------------------------
# estimator


class EncoderDecoderForecaster(BaseEstimator):
    """Ensemble of encoder/decoder LSTMs with asymmetric Laplace heads.

    ``fit`` takes a list of :class:`~streamcast.data.BasinRecord`; training
    targets may be restricted to ``train_ranges`` (list of ``(start, end)``
    dates), while inputs from outside those ranges still feed the hindcast.

    Parameters
    ----------
    hindcast_length : int
        Encoder sequence length in days.
    hidden_size : int
        LSTM cell count for both encoder and decoder.
    n_members : int
        Number of independently seeded ensemble members.
    random_state : int
        Member ``i`` is trained with seed ``random_state + i``.
    n_jobs : int
        Members to train concurrently (joblib).
    """

    def __init__(
        self,
        hindcast_length=PAPER_HINDCAST_LENGTH,
        hidden_size=32,
        batch_size=16,
        training_steps=2_000,
        learning_rate=1e-3,
        lr_schedule="cosine",
        clip_norm=1.0,
        statics_in_decoder=True,
        shared_head=True,
        validate_every=PAPER_VALIDATE_EVERY,
        n_members=PAPER_ENSEMBLE_SIZE,
        forecast_sources=("hres",),
        random_state=0,
        n_jobs=1,
    ):
        self.hindcast_length = hindcast_length
        self.hidden_size = hidden_size
        self.batch_size = batch_size
        self.training_steps = training_steps
        self.learning_rate = learning_rate
        self.lr_schedule = lr_schedule
        self.clip_norm = clip_norm
        self.statics_in_decoder = statics_in_decoder
        self.shared_head = shared_head
        self.validate_every = validate_every
        self.n_members = n_members
        self.forecast_sources = forecast_sources
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self, dataset, seed):
        return ModelConfig(
            hindcast_length=self.hindcast_length,
            hidden_size=self.hidden_size,
            n_hindcast_features=dataset.n_hindcast_features,
            n_forecast_features=dataset.n_forecast_features,
            batch_size=self.batch_size,
            training_steps=self.training_steps,
            learning_rate=self.learning_rate,
            lr_schedule=self.lr_schedule,
            clip_norm=self.clip_norm,
            statics_in_decoder=self.statics_in_decoder,
            shared_head=self.shared_head,
            validate_every=self.validate_every,
            seed=seed,
        )

    def make_dataset(self, records, ranges=None):
        check_fitted = getattr(self, "preprocessor_", None)
        if check_fitted is None:
            raise ValueError("forecaster is not fitted")
        masks = date_mask(records, ranges) if ranges else None
        return ForecastDataset(records, self.preprocessor_, self.hindcast_length,
                               target_masks=masks, statics_in_decoder=self.statics_in_decoder)

    def fit(self, records, train_ranges=None, validation_records=None):
        masks = date_mask(records, train_ranges) if train_ranges else None
        self.preprocessor_ = Preprocessor.fit(records, masks, forecast_sources=self.forecast_sources)
        dataset = ForecastDataset(records, self.preprocessor_, self.hindcast_length,
                                  target_masks=masks, statics_in_decoder=self.statics_in_decoder)
        validation = self.make_dataset(validation_records) if validation_records else None
        seeds = [self.random_state + i for i in range(self.n_members)]
        if self.n_jobs == 1:
            members = [train(dataset, self._config(dataset, s), s, validation) for s in seeds]
        else:
            from joblib import Parallel, delayed

            members = Parallel(n_jobs=self.n_jobs)(
                delayed(train)(dataset, self._config(dataset, s), s, validation) for s in seeds
            )
        self.members_ = members
        self.excluded_ = dict(dataset.excluded)
        return self

    def predict(self, records, issue_dates=None) -> pd.DataFrame:
        dataset = self.make_dataset(records)
        return predict_ensemble(self.members_, dataset, issue_dates, n_members=self.n_members)

    def save(self, path):
        save_checkpoint(path, self.members_, self.preprocessor_)

    @classmethod
    def load(cls, path):
        states, pre = load_checkpoint(path)
        c = states[0].config
        est = cls(
            hindcast_length=c.hindcast_length,
            hidden_size=c.hidden_size,
            batch_size=c.batch_size,
            training_steps=c.training_steps,
            learning_rate=c.learning_rate,
            lr_schedule=c.lr_schedule,
            clip_norm=c.clip_norm,
            statics_in_decoder=c.statics_in_decoder,
            shared_head=c.shared_head,
            validate_every=c.validate_every,
            n_members=len(states),
            forecast_sources=pre.forecast_sources,
            random_state=c.seed,
        )
        est.members_ = states
        est.preprocessor_ = pre
        est.excluded_ = {}
        return est
