"""Gated recurrent hazard network with hand-written backpropagation.

Shapes used throughout: ``B`` records, ``T`` intervals (the grid horizon),
``H`` hidden units, ``F`` input features.  Covariate rows after a record's
observed length are filled forward from its last observed row, so the
network can emit a hazard for every interval; losses never look past the
observed length, so the fill leaks nothing into training.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..data import Cohort, LongitudinalRecord
from . import losses
from .config import BINARY, ModelConfig, ModelConfigError

PARAM_NAMES = ("W", "U_zr", "U_n", "b", "head_W", "head_b")


class ModelParams(dict):
    """Named weight arrays; ``flat``/``from_flat`` address them as one vector."""

    def flat(self) -> np.ndarray:
        return np.concatenate([self[k].ravel() for k in PARAM_NAMES])

    def from_flat(self, vec) -> "ModelParams":
        out, pos = ModelParams(), 0
        for k in PARAM_NAMES:
            size = self[k].size
            out[k] = np.asarray(vec[pos : pos + size], dtype=np.float64).reshape(self[k].shape).copy()
            pos += size
        return out

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.items()})

    def zeros_like(self) -> "ModelParams":
        return ModelParams({k: np.zeros_like(v) for k, v in self.items()})

    @property
    def size(self) -> int:
        return sum(v.size for v in self.values())


def n_features(config: ModelConfig, n_covariates: int) -> int:
    return n_covariates + (1 if config.heads == 1 else 0)


def init_params(config: ModelConfig, n_covariates: int, horizon: int, rng=None) -> ModelParams:
    rng = np.random.default_rng(config.seed) if rng is None else rng
    f, h = n_features(config, n_covariates), config.hidden_size
    bound = 1.0 / np.sqrt(h)
    return ModelParams(
        W=rng.uniform(-bound, bound, (f, 3 * h)),
        U_zr=rng.uniform(-bound, bound, (h, 2 * h)),
        U_n=rng.uniform(-bound, bound, (h, h)),
        b=np.zeros(3 * h),
        head_W=rng.uniform(-bound, bound, (config.heads, horizon, h)),
        head_b=np.zeros((config.heads, horizon)),
    )


@dataclass
class Batch:
    x: np.ndarray  # (B, T, F) forward-filled inputs
    treatment: np.ndarray  # (B, T) forward-filled treatment
    times: np.ndarray  # (B,)
    events: np.ndarray  # (B,)

    def __len__(self):
        return self.x.shape[0]

    @property
    def final_treatment(self) -> np.ndarray:
        return self.treatment[np.arange(len(self)), self.times - 1]

    def take(self, idx) -> "Batch":
        return Batch(self.x[idx], self.treatment[idx], self.times[idx], self.events[idx])


def make_batch(records, horizon: int, config: ModelConfig) -> Batch:
    if isinstance(records, Cohort):
        records = records.records
    records = list(records)
    if not records:
        raise ModelConfigError("cannot build a batch from zero records")
    d = records[0].covariates.shape[1]
    x = np.empty((len(records), horizon, d))
    a = np.empty((len(records), horizon), dtype=np.int8)
    for k, r in enumerate(records):
        t = r.observed_length
        if t > horizon:
            raise ModelConfigError(f"record {r.id} is longer than the horizon {horizon}")
        x[k, :t] = r.covariates
        x[k, t:] = r.covariates[t - 1]
        a[k, :t] = r.treatment
        a[k, t:] = r.treatment[t - 1]
    if config.heads == 1:
        x = np.concatenate([x, a[..., None].astype(np.float64)], axis=2)
    times = np.array([r.observed_length for r in records], dtype=np.int64)
    events = np.array([r.event for r in records], dtype=bool)
    return Batch(x, a, times, events)


# --- GRU -------------------------------------------------------------------

def gru_forward(p: ModelParams, x: np.ndarray, mask: np.ndarray):
    """Run the cell over ``x`` (N, L, F); steps with ``mask == 0`` hold the state."""
    n, length, _ = x.shape
    h = p["U_n"].shape[0]
    xw = x @ p["W"] + p["b"]
    s = np.zeros((n, h))
    states = np.empty((n, length, h))
    cache = []
    for t in range(length):
        zr = expit(xw[:, t, : 2 * h] + s @ p["U_zr"])
        z, r = zr[:, :h], zr[:, h:]
        cand = np.tanh(xw[:, t, 2 * h :] + (r * s) @ p["U_n"])
        m = mask[:, t : t + 1]
        new = m * ((1.0 - z) * cand + z * s) + (1.0 - m) * s
        cache.append((s, z, r, cand, m))
        s = new
        states[:, t] = s
    return states, cache


def gru_backward(p: ModelParams, x: np.ndarray, cache, d_states: np.ndarray, grads: ModelParams):
    n, length, _ = x.shape
    h = p["U_n"].shape[0]
    d_pre = np.zeros((n, length, 3 * h))
    ds = np.zeros((n, h))
    for t in range(length - 1, -1, -1):
        s_prev, z, r, cand, m = cache[t]
        ds = ds + d_states[:, t]
        d_new = m * ds
        ds_prev = (1.0 - m) * ds + d_new * z
        da_n = d_new * (1.0 - z) * (1.0 - cand**2)
        da_z = d_new * (s_prev - cand) * z * (1.0 - z)
        d_rs = da_n @ p["U_n"].T
        da_r = d_rs * s_prev * r * (1.0 - r)
        ds_prev += d_rs * r
        da_zr = np.concatenate([da_z, da_r], axis=1)
        ds_prev += da_zr @ p["U_zr"].T
        grads["U_zr"] += s_prev.T @ da_zr
        grads["U_n"] += (r * s_prev).T @ da_n
        d_pre[:, t, : 2 * h] = da_zr
        d_pre[:, t, 2 * h :] = da_n
        ds = ds_prev
    flat_pre = d_pre.reshape(-1, 3 * h)
    grads["W"] += x.reshape(-1, x.shape[2]).T @ flat_pre
    grads["b"] += flat_pre.sum(axis=0)


def _windows(x: np.ndarray, u: int):
    """Left-padded sliding windows: (B, T, F) -> inputs (B*T, u, F) and mask (B*T, u)."""
    b, horizon, f = x.shape
    pad = np.concatenate([np.zeros((b, u - 1, f)), x], axis=1)
    idx = np.arange(horizon)[:, None] + np.arange(u)[None, :]
    xw = pad[:, idx].reshape(b * horizon, u, f)
    valid = (idx >= u - 1).astype(np.float64)
    return xw, np.broadcast_to(valid, (b, horizon, u)).reshape(b * horizon, u)


def encode(p: ModelParams, config: ModelConfig, x: np.ndarray):
    """Hidden representation for every (record, interval), shape (B, T, H)."""
    b, horizon, _ = x.shape
    u = config.history_length
    if u is None or u >= horizon:
        states, cache = gru_forward(p, x, np.ones((b, horizon)))
        return states, (x, cache, None)
    xw, mask = _windows(x, u)
    states, cache = gru_forward(p, xw, mask)
    return states[:, -1].reshape(b, horizon, -1), (xw, cache, u)


def encode_backward(p, enc_cache, d_rep: np.ndarray, grads: ModelParams):
    xin, cache, u = enc_cache
    if u is None:
        gru_backward(p, xin, cache, d_rep, grads)
        return
    d_states = np.zeros(xin.shape[:2] + (d_rep.shape[2],))
    d_states[:, -1] = d_rep.reshape(-1, d_rep.shape[2])
    gru_backward(p, xin, cache, d_states, grads)


def dropout_mask(config: ModelConfig, shape, rng) -> np.ndarray | None:
    if config.dropout_p == 0 or rng is None:
        return None
    keep = 1.0 - config.dropout_p
    return (rng.random(shape) < keep) / keep


def _check_dims(p: ModelParams, config: ModelConfig, batch: Batch):
    if batch.x.shape[2] != p["W"].shape[0]:
        raise ModelConfigError(f"batch has {batch.x.shape[2]} input features, parameters expect {p['W'].shape[0]}")
    if batch.x.shape[1] != p["head_W"].shape[1]:
        raise ModelConfigError(f"batch horizon {batch.x.shape[1]} != model horizon {p['head_W'].shape[1]}")
    if p["head_W"].shape[0] != config.heads:
        raise ModelConfigError("parameter head count does not match the config")


def forward_logits(p: ModelParams, config: ModelConfig, batch: Batch, mask=None):
    """Per-head hazard logits (heads, B, T) plus everything backward needs."""
    _check_dims(p, config, batch)
    rep, enc_cache = encode(p, config, batch.x)
    rep_d = rep if mask is None else rep * mask
    logits = np.einsum("bth,kth->kbt", rep_d, p["head_W"]) + p["head_b"][:, None, :]
    return logits, (rep, rep_d, enc_cache, mask)


def factual(logits: np.ndarray, batch: Batch) -> np.ndarray:
    if logits.shape[0] == 1:
        return logits[0]
    return np.where(batch.treatment == 1, logits[1], logits[0])


_LOW, _HIGH = np.finfo(np.float64).tiny, np.nextafter(1.0, 0.0)


def squash(logits: np.ndarray) -> np.ndarray:
    """Logistic map kept strictly inside (0, 1) even where float64 rounds to an endpoint."""
    return np.clip(expit(logits), _LOW, _HIGH)


def forward(p: ModelParams, config: ModelConfig, records, horizon: int | None = None) -> np.ndarray:
    """Hazard sequences for each head, shape (heads, B, T), dropout off.

    For the binary variant these are per-interval event probabilities.
    """
    if isinstance(records, LongitudinalRecord):
        records = [records]
    if isinstance(records, Batch):
        batch = records
    else:
        batch = make_batch(records, horizon or p["head_W"].shape[1], config)
    logits, _ = forward_logits(p, config, batch)
    return squash(logits)


def loss_and_grad(p: ModelParams, config: ModelConfig, batch: Batch, mask=None, need_grad: bool = True):
    """Weighted training loss, its components and the gradient w.r.t. every parameter."""
    logits, (rep, rep_d, enc_cache, mask) = forward_logits(p, config, batch, mask)
    lf = factual(logits, batch)
    comps = {}
    if config.variant == BINARY:
        comps["mse"], d_lf = losses.binary_mse_logits(lf, batch.times, batch.events)
        total = comps["mse"]
    else:
        total, d_lf = 0.0, np.zeros_like(lf)
        if config.alpha_likelihood > 0:
            comps["likelihood"], g = losses.likelihood_logits(lf, batch.times, batch.events)
            total += config.alpha_likelihood * comps["likelihood"]
            d_lf += config.alpha_likelihood * g
        if config.beta_rank > 0:
            comps["rank"], g = losses.rank_logits(lf, batch.times, batch.events, config.rank_sigma)
            total += config.beta_rank * comps["rank"]
            d_lf += config.beta_rank * g
    d_rep = np.zeros_like(rep)
    if config.variant != BINARY and config.heads == 2 and config.gamma_calibration > 0:
        rows = np.arange(len(batch))
        final = rep[rows, batch.times - 1]
        comps["calibration"], g = losses.calibration_grad(final, batch.final_treatment)
        total += config.gamma_calibration * comps["calibration"]
        d_rep[rows, batch.times - 1] += config.gamma_calibration * g
    if not need_grad:
        return float(total), comps, None

    grads = p.zeros_like()
    if config.heads == 1:
        d_logits = d_lf[None]
    else:
        treated = batch.treatment == 1
        d_logits = np.stack([np.where(treated, 0.0, d_lf), np.where(treated, d_lf, 0.0)])
    grads["head_b"] += d_logits.sum(axis=1)
    grads["head_W"] += np.einsum("kbt,bth->kth", d_logits, rep_d)
    d_rep_d = np.einsum("kbt,kth->bth", d_logits, p["head_W"])
    d_rep += d_rep_d if mask is None else d_rep_d * mask
    encode_backward(p, enc_cache, d_rep, grads)
    return float(total), comps, grads


def batch_loss(p: ModelParams, config: ModelConfig, batch: Batch, mask=None) -> float:
    return loss_and_grad(p, config, batch, mask, need_grad=False)[0]
