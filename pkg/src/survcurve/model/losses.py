"""Training losses.

Each loss has a probability-space form that mirrors its definition and a
``*_logits`` form used in training, which works on hazard logits and returns
the loss together with its gradient.  Both reduce to the batch mean.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..survival import LabelMatrix


def softplus(x):
    return np.logaddexp(0.0, x)


def labels_to_arrays(labels) -> tuple[np.ndarray, np.ndarray]:
    """Observed lengths and event flags from one or many :class:`LabelMatrix`."""
    if isinstance(labels, LabelMatrix):
        labels = [labels]
    times = np.array([int(np.sum(lab.e_row)) + 1 for lab in labels], dtype=np.int64)
    events = np.array([bool(np.any(lab.c_row)) for lab in labels], dtype=bool)
    return times, events


def _rows(a):
    return np.atleast_2d(np.asarray(a, dtype=np.float64))


def likelihood_loss(hazards, labels) -> float:
    """Negative log-likelihood of the observed first-hit or censoring time.

    Event at ``t``: ``-[log h(t) + sum_{j<t} log(1 - h(j))]``; censored at
    ``t``: ``-sum_{j<=t} log(1 - h(j))``.
    """
    h = _rows(hazards)
    times, events = labels_to_arrays(labels)
    total = 0.0
    for row, t, ev in zip(h, times, events):
        surv = -np.sum(np.log1p(-row[: t - 1]))
        last = -np.log(row[t - 1]) if ev else -np.log1p(-row[t - 1])
        total += surv + last
    return total / len(times)


def likelihood_logits(logits: np.ndarray, times: np.ndarray, events: np.ndarray):
    b, horizon = logits.shape
    grid = np.arange(1, horizon + 1)[None, :]
    before = grid < times[:, None]
    at = grid == times[:, None]
    sp = softplus(logits)
    loss = np.sum(sp * before) + np.sum(np.where(events[:, None], softplus(-logits), sp) * at)
    sig = expit(logits)
    grad = sig * before + np.where(events[:, None], sig - 1.0, sig) * at
    return loss / b, grad / b


def comparable_pairs(times: np.ndarray, events: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays ``(i, j)`` with an event for ``i`` and ``t_i < t_j``."""
    ok = events[:, None] & (times[:, None] < times[None, :])
    return np.nonzero(ok)


def rank_loss(hazards, labels, sigma: float = 0.1) -> float:
    """Exponential concordance surrogate over comparable pairs.

    Averages ``exp((S_i(t_i) - S_j(t_i)) / sigma)``; a well-ordered pair
    (``S_i`` well below ``S_j``) contributes almost nothing.
    """
    h = _rows(hazards)
    times, events = labels_to_arrays(labels)
    s = np.cumprod(1.0 - h, axis=1)
    i, j = comparable_pairs(times, events)
    if i.size == 0:
        return 0.0
    col = times[i] - 1
    return float(np.mean(np.exp((s[i, col] - s[j, col]) / sigma)))


def survival_from_logits(logits: np.ndarray) -> np.ndarray:
    return np.exp(-np.cumsum(softplus(logits), axis=-1))


def rank_logits(logits: np.ndarray, times: np.ndarray, events: np.ndarray, sigma: float):
    s = survival_from_logits(logits)
    i, j = comparable_pairs(times, events)
    if i.size == 0:
        return 0.0, np.zeros_like(logits)
    col = times[i] - 1
    v = np.exp((s[i, col] - s[j, col]) / sigma)
    loss = float(v.mean())
    w = v / (sigma * v.size)
    ds = np.zeros_like(s)
    np.add.at(ds, (i, col), w)
    np.add.at(ds, (j, col), -w)
    # dS(t)/dlogit(k) = -S(t) * sigmoid(logit(k)) for k <= t
    tail = np.cumsum((ds * s)[:, ::-1], axis=1)[:, ::-1]
    return loss, -expit(logits) * tail


def calibration_loss(hidden, treatments) -> float:
    """Squared distance between mean treated and mean control representations."""
    hidden = np.asarray(hidden, dtype=np.float64)
    a = np.asarray(treatments).astype(bool)
    if a.all() or not a.any():
        return 0.0
    diff = hidden[a].mean(axis=0) - hidden[~a].mean(axis=0)
    return float(diff @ diff)


def calibration_grad(hidden: np.ndarray, treatments: np.ndarray):
    a = np.asarray(treatments).astype(bool)
    grad = np.zeros_like(hidden)
    if a.all() or not a.any():
        return 0.0, grad
    diff = hidden[a].mean(axis=0) - hidden[~a].mean(axis=0)
    grad[a] = 2.0 * diff / a.sum()
    grad[~a] = -2.0 * diff / (~a).sum()
    return float(diff @ diff), grad


def binary_mse_loss(probs, labels) -> float:
    """Per-record mean squared error over observed intervals, averaged over records.

    The target is 1 at the event interval and 0 elsewhere.
    """
    p = _rows(probs)
    times, events = labels_to_arrays(labels)
    total = 0.0
    for row, t, ev in zip(p, times, events):
        y = np.zeros(t)
        y[t - 1] = float(ev)
        total += np.mean((row[:t] - y) ** 2)
    return total / len(times)


def binary_mse_logits(logits: np.ndarray, times: np.ndarray, events: np.ndarray):
    b, horizon = logits.shape
    grid = np.arange(1, horizon + 1)[None, :]
    observed = grid <= times[:, None]
    y = ((grid == times[:, None]) & events[:, None]).astype(np.float64)
    p = expit(logits)
    resid = (p - y) * observed
    per = np.sum(resid**2, axis=1) / times
    grad = 2.0 * resid * p * (1.0 - p) / times[:, None] / b
    return float(per.mean()), grad
