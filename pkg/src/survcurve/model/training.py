from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logit

from ..data import Cohort, LongitudinalRecord
from .config import BINARY, ModelConfig, ModelConfigError
from .network import (
    Batch,
    ModelParams,
    batch_loss,
    dropout_mask,
    forward_logits,
    factual,
    init_params,
    loss_and_grad,
    make_batch,
    squash,
)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainReport:
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    wall_time: float = 0.0

    @property
    def epochs_run(self) -> int:
        return len(self.history)

    @property
    def loss_trajectory(self) -> list[float]:
        return [h["train_total"] for h in self.history]

    def to_dict(self) -> dict:
        return {"history": self.history, "best_epoch": self.best_epoch, "wall_time": self.wall_time,
                "epochs_run": self.epochs_run}


def two_copies(cohort: Cohort) -> Cohort:
    """Duplicate an untreated cohort: one copy marked treated, one marked control."""
    recs = []
    for arm, suffix in ((1, "treated"), (0, "control")):
        for r in cohort.records:
            recs.append(replace(r, id=f"{r.id}#{suffix}", treatment=np.full(r.observed_length, arm, dtype=np.int8)))
    return replace(cohort, records=tuple(recs), has_treatment=True)


def _prepare(cohort: Cohort, config: ModelConfig) -> Cohort:
    if config.heads == 2 and not cohort.has_treatment:
        return two_copies(cohort)
    return cohort


def _empirical_hazard_logits(batch: Batch, horizon: int) -> np.ndarray:
    grid = np.arange(1, horizon + 1)
    at_risk = (batch.times[None, :] >= grid[:, None]).sum(axis=1)
    died = ((batch.times[None, :] == grid[:, None]) & batch.events[None, :]).sum(axis=1)
    h = (died + 0.5) / (at_risk + 1.0)
    return logit(np.clip(h, 1e-3, 1 - 1e-3))


class Adam:
    def __init__(self, params: ModelParams, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0

    def step(self, params: ModelParams, grads: ModelParams) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k in params:
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * grads[k]
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * grads[k] ** 2
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def _check_finite(comps: dict, epoch: int) -> None:
    for name, value in comps.items():
        if not np.isfinite(value):
            raise TrainingError(f"{name} loss became non-finite ({value}) in epoch {epoch}")


def train(config: ModelConfig, train_cohort: Cohort, validation_cohort: Cohort | None = None,
          params: ModelParams | None = None):
    """Fit the network by mini-batch Adam, keeping the epoch with the best validation loss.

    Without a validation cohort the last epoch is kept.  Identical inputs give
    identical parameters.
    """
    if validation_cohort is not None and len(validation_cohort) and (
        validation_cohort.grid.horizon != train_cohort.grid.horizon
        or len(validation_cohort.covariate_names) != len(train_cohort.covariate_names)
    ):
        raise ModelConfigError("train and validation cohorts must share grid and covariates")
    horizon = train_cohort.grid.horizon
    train_batch = make_batch(_prepare(train_cohort, config), horizon, config)
    val_batch = None
    if validation_cohort is not None and len(validation_cohort):
        val_batch = make_batch(_prepare(validation_cohort, config), horizon, config)

    rng = np.random.default_rng(config.seed)
    if params is None:
        params = init_params(config, len(train_cohort.covariate_names), horizon, rng)
        params["head_b"][:] = _empirical_hazard_logits(train_batch, horizon)
    else:
        params = params.copy()
    opt = Adam(params, config.learning_rate)
    report = TrainReport()
    best, best_val = params.copy(), np.inf
    started = time.perf_counter()
    n = len(train_batch)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        sums: dict[str, float] = {}
        for start in range(0, n, config.batch_size):
            mb = train_batch.take(order[start : start + config.batch_size])
            mask = dropout_mask(config, mb.x.shape[:2] + (config.hidden_size,), rng)
            total, comps, grads = loss_and_grad(params, config, mb, mask)
            comps["total"] = total
            _check_finite(comps, epoch)
            for k, v in comps.items():
                sums[k] = sums.get(k, 0.0) + float(v) * len(mb)
            opt.step(params, grads)
        row = {"epoch": epoch, **{f"train_{k}": v / n for k, v in sorted(sums.items())}}
        if val_batch is not None:
            val = batch_loss(params, config, val_batch)
            if not np.isfinite(val):
                raise TrainingError(f"validation loss became non-finite ({val}) in epoch {epoch}")
            row["validation"] = val
            if val < best_val:
                best_val, best = val, params.copy()
                report.best_epoch = epoch
        report.history.append(row)
    if val_batch is None:
        best = params
        report.best_epoch = config.epochs
    report.wall_time = time.perf_counter() - started
    return best, report


@dataclass(frozen=True)
class CurveEnsemble:
    """``K`` Monte-Carlo dropout samples per record.

    ``hazards`` holds the network's per-interval outputs (event probabilities
    for both variants) and ``samples`` the survival curves built from them,
    both shaped ``(n, K, horizon)``.
    """

    ids: tuple[str, ...]
    hazards: np.ndarray
    samples: np.ndarray

    def __len__(self):
        return len(self.ids)

    def __getitem__(self, i) -> "CurveEnsemble":
        idx = np.atleast_1d(np.arange(len(self))[i])
        return CurveEnsemble(tuple(self.ids[k] for k in idx), self.hazards[idx], self.samples[idx])

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=1)

    @property
    def std(self) -> np.ndarray:
        # centred on the first draw so that identical samples give exactly zero
        d = self.samples - self.samples[:, :1]
        return np.sqrt(np.maximum(np.mean(d**2, axis=1) - np.mean(d, axis=1) ** 2, 0.0))

    @property
    def mean_hazard(self) -> np.ndarray:
        return self.hazards.mean(axis=1)


def predict_curves(params: ModelParams, config: ModelConfig, cohort, *, mc_samples: int | None = None,
                   seed: int | None = None, head: int | None = None, chunk: int = 256) -> CurveEnsemble:
    """Monte-Carlo dropout survival curves for every record.

    ``head`` forces the control (0) or treated (1) output of a two-head model;
    by default each interval uses the head matching the record's treatment.
    """
    records = cohort.records if isinstance(cohort, Cohort) else tuple(cohort)
    if isinstance(records, LongitudinalRecord):
        records = (records,)
    horizon = params["head_W"].shape[1]
    k = mc_samples or config.mc_samples
    rng = np.random.default_rng(config.seed + 1 if seed is None else seed)
    out = []
    for start in range(0, len(records), chunk):
        batch = make_batch(records[start : start + chunk], horizon, config)
        if config.dropout_p == 0:
            reps, draws = batch, 1
        else:
            idx = np.repeat(np.arange(len(batch)), k)
            reps, draws = batch.take(idx), k
        mask = dropout_mask(config, reps.x.shape[:2] + (config.hidden_size,), rng)
        logits, _ = forward_logits(params, config, reps, mask)
        lf = factual(logits, reps) if head is None else logits[head]
        h = squash(lf).reshape(len(batch), draws, horizon)
        if draws == 1:
            h = np.repeat(h, k, axis=1)
        out.append(h)
    hazards = np.concatenate(out, axis=0) if out else np.zeros((0, k, horizon))
    return CurveEnsemble(tuple(r.id for r in records), hazards, np.cumprod(1.0 - hazards, axis=-1))


def analytic_gradient(params, config, batch, mask=None) -> np.ndarray:
    return loss_and_grad(params, config, batch, mask)[2].flat()


GRADIENT_FLOOR = 1e-6


def gradient_check(params: ModelParams, config: ModelConfig, batch: Batch, *, n_check: int = 200,
                   step: float = 1e-5, seed: int = 0, grad_fn=analytic_gradient,
                   floor: float = GRADIENT_FLOOR) -> float:
    """Largest relative gap between ``grad_fn`` and central finite differences.

    Checks ``n_check`` randomly chosen parameters (all when there are fewer).
    A fixed dropout mask is drawn once so the loss is deterministic.  The
    relative error is ``|a - n| / max(|a|, |n|, floor * max(1, |loss|))``.
    Central differences at ``step = 1e-5`` carry rounding noise near
    ``1e-11 * |loss|``; the floor keeps gradients far below the loss scale
    from turning that noise into a large relative error.
    """
    rng = np.random.default_rng(seed)
    mask = dropout_mask(config, batch.x.shape[:2] + (config.hidden_size,), rng)
    vec = params.flat()
    grad = np.asarray(grad_fn(params, config, batch, mask))
    scale = floor * max(1.0, abs(batch_loss(params, config, batch, mask)))
    picks = np.arange(vec.size) if vec.size <= n_check else rng.choice(vec.size, n_check, replace=False)
    worst = 0.0
    for k in picks:
        bump = np.zeros_like(vec)
        bump[k] = step
        up = batch_loss(params.from_flat(vec + bump), config, batch, mask)
        down = batch_loss(params.from_flat(vec - bump), config, batch, mask)
        num = (up - down) / (2 * step)
        worst = max(worst, abs(num - grad[k]) / max(abs(num), abs(grad[k]), scale))
    return worst
