"""Discrete-time hazard and survival algebra.

Intervals are 1-based, ``t`` labels the interval ``(t-1, t]``.  Arrays are
stored 0-based along the last axis, so ``values[..., t - 1]`` holds interval
``t``.  ``S(0) = 1`` by definition and is never stored.

All transforms broadcast over leading axes, so a ``(n, horizon)`` matrix of
hazards maps to a ``(n, horizon)`` matrix of survival curves.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


@dataclass(frozen=True)
class TimeGrid:
    """Discrete follow-up grid of ``horizon`` intervals.

    ``window_size`` is the number of raw time steps folded into one interval
    (1 when the data are natively discrete).
    """

    horizon: int
    step_label: str = "interval"
    window_size: int = 1

    def __post_init__(self):
        if int(self.horizon) < 1:
            raise InvalidInputError(f"horizon must be >= 1, got {self.horizon}")
        if int(self.window_size) < 1:
            raise InvalidInputError(f"window_size must be >= 1, got {self.window_size}")


class LabelMatrix(NamedTuple):
    """Two-row training target: ``e_row`` (still at risk) and ``c_row`` (event)."""

    e_row: np.ndarray
    c_row: np.ndarray

    @property
    def censored(self) -> bool:
        return not bool(self.c_row.any())


def check_hazard(h, horizon: int | None = None) -> np.ndarray:
    """Validate and return ``h`` as a float64 array of probabilities."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 0:
        raise InvalidInputError("hazard sequence must have at least one interval")
    if horizon is not None and h.shape[-1] != horizon:
        raise InvalidInputError(f"hazard length {h.shape[-1]} != horizon {horizon}")
    if not np.all((h >= 0.0) & (h <= 1.0)):
        raise InvalidInputError("hazards must lie in [0, 1]")
    return h


def check_survival(s, horizon: int | None = None) -> np.ndarray:
    """Validate and return ``s`` as a float64 non-increasing curve in [0, 1]."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 0:
        raise InvalidInputError("survival curve must have at least one interval")
    if horizon is not None and s.shape[-1] != horizon:
        raise InvalidInputError(f"curve length {s.shape[-1]} != horizon {horizon}")
    if not np.all((s >= 0.0) & (s <= 1.0)):
        raise InvalidInputError("survival values must lie in [0, 1]")
    if np.any(np.diff(s, axis=-1) > 0.0):
        raise InvalidInputError("survival curve must be non-increasing")
    return s


def hazard_to_survival(h) -> np.ndarray:
    """``S(t) = prod_{j <= t} (1 - h(j))`` as an exact cumulative product."""
    h = check_hazard(h)
    return np.cumprod(1.0 - h, axis=-1)


def survival_to_hazard(s) -> np.ndarray:
    """Invert :func:`hazard_to_survival`.

    ``h(t) = 1 - S(t) / S(t-1)`` with ``S(0) = 1``.  Once the curve reaches
    exactly zero the conditional probability is undefined and later hazards
    are set to 0.
    """
    s = check_survival(s)
    prev = np.concatenate([np.ones_like(s[..., :1]), s[..., :-1]], axis=-1)
    h = np.zeros_like(s)
    alive = prev > 0.0
    h[alive] = 1.0 - s[alive] / prev[alive]
    return h


def event_time_pmf(h) -> np.ndarray:
    """Probability that the first event falls in each interval.

    ``pmf(t) = h(t) * S(t-1)``; the remaining mass ``S(horizon)`` lies beyond
    the grid.
    """
    h = check_hazard(h)
    s = np.cumprod(1.0 - h, axis=-1)
    prev = np.concatenate([np.ones_like(s[..., :1]), s[..., :-1]], axis=-1)
    return h * prev


def build_label_matrix(observed_length: int, event: bool, grid: TimeGrid | int) -> LabelMatrix:
    """Encode an observed time and disposition as the ``E``/``C`` label rows.

    ``e_row`` is 1 strictly before the observed interval and 0 from it on;
    ``c_row`` is one-hot at the observed interval for an event and all zeros
    for a censored record.
    """
    horizon = grid.horizon if isinstance(grid, TimeGrid) else int(grid)
    t_i = int(observed_length)
    if not 1 <= t_i <= horizon:
        raise InvalidInputError(f"observed_length {t_i} outside [1, {horizon}]")
    e_row = np.zeros(horizon, dtype=np.int8)
    e_row[: t_i - 1] = 1
    c_row = np.zeros(horizon, dtype=np.int8)
    if event:
        c_row[t_i - 1] = 1
    return LabelMatrix(e_row, c_row)


def label_matrices(times, events, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`build_label_matrix`; returns ``(E, C)`` of shape ``(n, horizon)``."""
    times = np.asarray(times, dtype=np.int64)
    events = np.asarray(events, dtype=bool)
    if times.size and (times.min() < 1 or times.max() > horizon):
        raise InvalidInputError(f"observed lengths must lie in [1, {horizon}]")
    grid = np.arange(1, horizon + 1)
    e = (grid[None, :] < times[:, None]).astype(np.int8)
    c = ((grid[None, :] == times[:, None]) & events[:, None]).astype(np.int8)
    return e, c


def kaplan_meier(times, events, horizon: int) -> np.ndarray:
    """Product-limit estimate on the discrete grid, one value per interval.

    A record censored at ``t`` counts as surviving interval ``t``.
    """
    times = np.asarray(times, dtype=np.int64)
    events = np.asarray(events, dtype=bool)
    grid = np.arange(1, horizon + 1)
    at_risk = (times[None, :] >= grid[:, None]).sum(axis=1)
    died = ((times[None, :] == grid[:, None]) & events[None, :]).sum(axis=1)
    frac = np.divide(died, at_risk, out=np.zeros(horizon), where=at_risk > 0)
    return np.cumprod(1.0 - frac)
