"""Synthetic cohorts drawn from a known logistic discrete-time hazard.

The true hazard for individual ``i`` in interval ``t`` is::

    h_i(t) = logistic(base_logit + beta . x_i + gamma * t + tau * a_i)

with static standard-normal covariates ``x_i`` and a once-drawn binary
treatment ``a_i``.  Censoring is geometric and independent of everything
else.  Because the generating hazards are kept, every estimate can be
compared with the truth.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .data import Cohort, LongitudinalRecord
from .survival import InvalidInputError, TimeGrid, hazard_to_survival


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 2000
    horizon: int = 20
    d: int = 5
    beta: tuple[float, ...] | None = None  # None -> 0.5 for every covariate
    gamma: float = 0.2
    tau: float = -0.5
    base_logit: float = -5.0
    treat_prob: float = 0.5
    censor_hazard: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1 or self.horizon < 1:
            raise InvalidInputError("n, d and horizon must all be >= 1")
        if self.beta is not None and len(self.beta) != self.d:
            raise InvalidInputError(f"beta has {len(self.beta)} entries, expected d={self.d}")
        for name in ("treat_prob", "censor_hazard"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1], got {p}")

    @property
    def beta_vector(self) -> np.ndarray:
        if self.beta is None:
            return np.full(self.d, 0.5)
        return np.asarray(self.beta, dtype=np.float64)


@dataclass(frozen=True)
class OracleHazards:
    """True hazard sequences, one row per generated record."""

    ids: tuple[str, ...]
    hazards: np.ndarray

    def __getitem__(self, rid: str) -> np.ndarray:
        try:
            return self.hazards[self.ids.index(rid)]
        except ValueError:
            raise KeyError(f"unknown id {rid!r}") from None

    def subset(self, ids) -> np.ndarray:
        index = {r: k for k, r in enumerate(self.ids)}
        return self.hazards[[index[r] for r in ids]]


def true_hazards(spec: SyntheticSpec, x: np.ndarray, a: np.ndarray) -> np.ndarray:
    t = np.arange(1, spec.horizon + 1)
    logit = spec.base_logit + x @ spec.beta_vector + spec.tau * a
    return expit(logit[:, None] + spec.gamma * t[None, :])


def generate_cohort(spec: SyntheticSpec) -> tuple[Cohort, OracleHazards]:
    """Draw a cohort and keep the hazards that generated it.

    Censoring wins a tie with the event interval, so ``censor_hazard = 1``
    censors everyone at interval 1.
    """
    rng = np.random.default_rng(spec.seed)
    x = rng.standard_normal((spec.n, spec.d))
    a = (rng.random(spec.n) < spec.treat_prob).astype(np.int8)
    h = true_hazards(spec, x, a)
    s = hazard_to_survival(h)

    u = rng.random(spec.n)
    below = s < u[:, None]
    event_t = np.where(below.any(axis=1), below.argmax(axis=1) + 1, spec.horizon + 1)
    if spec.censor_hazard > 0:
        censor_t = rng.geometric(spec.censor_hazard, size=spec.n)
    else:
        censor_t = np.full(spec.n, np.iinfo(np.int64).max)

    is_event = (event_t < censor_t) & (event_t <= spec.horizon)
    observed = np.where(is_event, event_t, np.minimum(censor_t, spec.horizon))

    ids = tuple(str(i) for i in range(spec.n))
    records = tuple(
        LongitudinalRecord(
            id=ids[i],
            covariates=np.repeat(x[i : i + 1], observed[i], axis=0),
            treatment=np.full(observed[i], a[i], dtype=np.int8),
            observed_length=int(observed[i]),
            event=bool(is_event[i]),
        )
        for i in range(spec.n)
    )
    names = tuple(f"x{k + 1}" for k in range(spec.d))
    cohort = Cohort(TimeGrid(spec.horizon), records, names, has_treatment=True)
    return cohort, OracleHazards(ids, h)


def oracle_survival(oracle: OracleHazards, rid: str) -> np.ndarray:
    return hazard_to_survival(oracle[rid])


def write_oracle_csv(oracle: OracleHazards, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "t", "true_hazard"])
        for rid, row in zip(oracle.ids, oracle.hazards):
            for t, v in enumerate(row, start=1):
                w.writerow([rid, t, repr(float(v))])
