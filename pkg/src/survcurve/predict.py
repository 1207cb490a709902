"""Event-time prediction from survival curves.

Two rules are provided: the inflection point of the curve (where its discrete
second difference turns from non-positive to positive) and the classic
probability threshold (first interval where ``S(t) < theta``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .survival import InvalidInputError

INFLECTION = "inflection"
THRESHOLD = "threshold"


@dataclass(frozen=True)
class TtePrediction:
    """Predicted event interval.

    When the rule finds no event inside follow-up, ``beyond_horizon`` is set
    and ``t_hat`` holds the horizon, which is how distances score it.
    """

    t_hat: int
    method: str
    spread: float = 0.0
    beyond_horizon: bool = False


@dataclass(frozen=True)
class ThresholdModel:
    theta_star: float

    def __post_init__(self):
        if not 0.0 < self.theta_star < 1.0:
            raise InvalidInputError(f"threshold must lie in (0, 1), got {self.theta_star}")


def smooth(curve, window: int = 3) -> np.ndarray:
    """Centered moving average whose window shrinks symmetrically at the edges."""
    s = np.asarray(curve, dtype=np.float64)
    if window < 1 or window % 2 == 0:
        raise InvalidInputError(f"smoothing window must be a positive odd integer, got {window}")
    half = window // 2
    if half == 0:
        return s.copy()
    n = s.shape[-1]
    csum = np.concatenate([np.zeros(s.shape[:-1] + (1,)), np.cumsum(s, axis=-1)], axis=-1)
    idx = np.arange(n)
    w = np.minimum(np.minimum(idx, n - 1 - idx), half)
    return (csum[..., idx + w + 1] - csum[..., idx - w]) / (2 * w + 1)


def second_differences(curve) -> np.ndarray:
    """``S(t+1) - 2 S(t) + S(t-1)`` for ``t = 2 .. horizon-1``."""
    s = np.asarray(curve, dtype=np.float64)
    return s[..., 2:] - 2.0 * s[..., 1:-1] + s[..., :-2]


def _inflection_index(curves: np.ndarray, window: int) -> np.ndarray:
    """Vectorised core of :func:`inflection_time`; 0 marks "no crossing"."""
    d2 = second_differences(smooth(curves, window))
    crossing = (d2[..., :-1] <= 0.0) & (d2[..., 1:] > 0.0)
    # d2[..., k] belongs to interval k + 2, so crossing[..., k] fires at interval k + 3
    if crossing.shape[-1] == 0:
        return np.zeros(crossing.shape[:-1], dtype=np.int64)
    found = crossing.any(axis=-1)
    return np.where(found, crossing.argmax(axis=-1) + 3, 0)


def inflection_time(curve, smoothing_window: int = 3) -> TtePrediction:
    """Predict the event at the earliest concave-to-convex turn of the curve.

    The curve is first smoothed with a centered moving average of
    ``smoothing_window`` points.  Flat or everywhere-convex curves have no
    such turn and give a beyond-horizon prediction.
    """
    s = np.asarray(curve, dtype=np.float64)
    if s.ndim != 1 or s.size < 3:
        raise InvalidInputError("inflection_time needs a 1-D curve of at least 3 intervals")
    k = int(_inflection_index(s, smoothing_window))
    if k == 0:
        return TtePrediction(s.size, INFLECTION, 0.0, True)
    return TtePrediction(k, INFLECTION)


def _threshold_index(curves: np.ndarray, theta: float) -> np.ndarray:
    below = np.asarray(curves) < theta
    return np.where(below.any(axis=-1), below.argmax(axis=-1) + 1, 0)


def threshold_time(curve, theta: float) -> TtePrediction:
    """First interval whose survival probability drops below ``theta``."""
    if not 0.0 < theta < 1.0:
        raise InvalidInputError(f"theta must lie in (0, 1), got {theta}")
    s = np.asarray(curve, dtype=np.float64)
    k = int(_threshold_index(s, theta))
    if k == 0:
        return TtePrediction(s.shape[-1], THRESHOLD, 0.0, True)
    return TtePrediction(k, THRESHOLD)


def predicted_times(curves, method: str = INFLECTION, *, theta: float | None = None,
                    smoothing_window: int = 3) -> np.ndarray:
    """Apply a rule to every curve along the last axis; sentinels become the horizon."""
    curves = np.asarray(curves, dtype=np.float64)
    horizon = curves.shape[-1]
    if method == INFLECTION:
        if horizon < 3:
            raise InvalidInputError("inflection needs curves of at least 3 intervals")
        k = _inflection_index(curves, smoothing_window)
    elif method == THRESHOLD:
        if theta is None or not 0.0 < theta < 1.0:
            raise InvalidInputError(f"threshold method needs theta in (0, 1), got {theta}")
        k = _threshold_index(curves, theta)
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    return np.where(k == 0, horizon, k)


def _crossing_times(curves: np.ndarray, theta: float) -> np.ndarray:
    """Fractional time at which the piecewise-linear curve falls below ``theta``.

    The curve starts at 1 at time 0; past the horizon it is continued linearly
    to 0 one interval later, so the result is continuous in ``theta`` and its
    ceiling is the threshold prediction (before mapping sentinels to the horizon).
    """
    n, horizon = curves.shape
    padded = np.concatenate([np.ones((n, 1)), curves, np.zeros((n, 1))], axis=1)
    k = np.argmax(padded[:, 1:] < theta, axis=1) + 1
    rows = np.arange(n)
    upper, lower = padded[rows, k - 1], padded[rows, k]
    return (k - 1) + (upper - theta) / (upper - lower)


def fit_threshold(curves, times, max_iter: int = 200) -> ThresholdModel:
    """Choose the survival threshold minimising mean ``|T_hat(theta) - T|`` on training curves.

    That objective is a step function of ``theta`` on which a simplex search
    stalls, so Nelder-Mead runs on ``logit(theta)`` from the simplex
    {0.5, 0.95} against a continuous relaxation: the distance between the
    interpolated crossing time and the middle of the true interval.  Every
    evaluated point is also scored on the exact objective and the best one is
    returned, ties going to the smaller relaxed value.
    """
    curves = np.asarray(curves, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if curves.ndim != 2 or curves.shape[0] < 1:
        raise InvalidInputError("fit_threshold needs at least one training curve")

    best = {"x": 0.0, "key": (np.inf, np.inf)}

    def objective(z):
        theta = float(expit(z[0]))
        if not 0.0 < theta < 1.0:
            return np.inf
        exact = float(np.mean(np.abs(predicted_times(curves, THRESHOLD, theta=theta) - times)))
        relaxed = float(np.mean(np.abs(_crossing_times(curves, theta) - (times - 0.5))))
        if (exact, relaxed) < best["key"]:
            best.update(x=float(z[0]), key=(exact, relaxed))
        return relaxed

    start = np.array([[logit(0.5)], [logit(0.95)]])
    minimize(objective, start[0], method="Nelder-Mead",
             options={"initial_simplex": start, "maxiter": max_iter, "xatol": 1e-8, "fatol": 1e-10})
    return ThresholdModel(float(expit(best["x"])))


def ensemble_predict(samples, method: str = INFLECTION, *, theta: float | None = None,
                     smoothing_window: int = 3) -> TtePrediction:
    """Predict from the mean of ``K`` sampled curves and report their spread.

    ``samples`` has shape ``(K, horizon)``.  ``spread`` is the population
    standard deviation of the per-sample predictions, with sentinels counted
    at the horizon.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] < 1:
        raise InvalidInputError("need at least one sampled curve")
    per_sample = predicted_times(samples, method, theta=theta, smoothing_window=smoothing_window)
    mean_curve = samples.mean(axis=0)
    if method == INFLECTION:
        base = inflection_time(mean_curve, smoothing_window)
    else:
        base = threshold_time(mean_curve, theta)
    return TtePrediction(base.t_hat, method, float(np.std(per_sample)), base.beyond_horizon)


def ensemble_predictions(samples, method: str = INFLECTION, *, theta: float | None = None,
                         smoothing_window: int = 3):
    """Cohort version of :func:`ensemble_predict` for samples shaped ``(n, K, horizon)``.

    Returns ``(t_hat, spread, beyond_horizon)`` arrays of length ``n``.
    """
    samples = np.asarray(samples, dtype=np.float64)
    horizon = samples.shape[-1]
    per_sample = predicted_times(samples, method, theta=theta, smoothing_window=smoothing_window)
    mean_curves = samples.mean(axis=1)
    if method == INFLECTION:
        k = _inflection_index(mean_curves, smoothing_window)
    else:
        k = _threshold_index(mean_curves, theta)
    t_hat = np.where(k == 0, horizon, k)
    return t_hat, per_sample.std(axis=1), k == 0
