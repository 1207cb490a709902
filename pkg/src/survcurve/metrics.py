"""Discrimination and timing metrics for predicted survival curves.

Risk for the C-index is ``1 - S(t_i)`` read at the earlier event time of each
comparable pair.  AUROC pools observed person-time and ranks survival
probabilities against the at-risk label.  Both are also reported per
interval ("estimation window") and averaged over the intervals where they
are defined.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .predict import INFLECTION, ensemble_predictions


class UndefinedMetricError(ValueError):
    """The metric has no value for these inputs (e.g. no comparable pairs)."""


def _window_concordance(curves: np.ndarray, times: np.ndarray, events: np.ndarray):
    """Per-interval concordance tallies.

    Returns ``(doubled_concordant, pairs)`` integer arrays indexed by the
    earlier event interval.  Doubling keeps half-credit ties integral, so the
    totals are exact.
    """
    horizon = curves.shape[1]
    conc2 = np.zeros(horizon, dtype=np.int64)
    pairs = np.zeros(horizon, dtype=np.int64)
    for t in np.unique(times[events]):
        cases = events & (times == t)
        later = times > t
        n_later = int(later.sum())
        if n_later == 0:
            continue
        risk_case = 1.0 - curves[cases, t - 1]
        risk_later = np.sort(1.0 - curves[later, t - 1])
        lo = np.searchsorted(risk_later, risk_case, side="left")
        hi = np.searchsorted(risk_later, risk_case, side="right")
        conc2[t - 1] = int(2 * lo.sum() + (hi - lo).sum())
        pairs[t - 1] = n_later * int(cases.sum())
    return conc2, pairs


def concordance_index(curves, times, events) -> float:
    """Harrell's C-index over pairs where the earlier member had an event.

    ``curves`` is ``(n, horizon)`` predicted survival; ties in risk count one
    half; ties in time are not comparable.
    """
    curves = np.asarray(curves, dtype=np.float64)
    times = np.asarray(times, dtype=np.int64)
    events = np.asarray(events, dtype=bool)
    conc2, pairs = _window_concordance(curves, times, events)
    total = int(pairs.sum())
    if total == 0:
        raise UndefinedMetricError("no comparable pairs")
    return int(conc2.sum()) / (2 * total)


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC with midranks; ``labels`` 1 marks positives."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).astype(bool).ravel()
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs both classes")
    ranks = rankdata(scores)
    return (ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def observed_mask(times, horizon: int) -> np.ndarray:
    times = np.asarray(times, dtype=np.int64)
    return np.arange(1, horizon + 1)[None, :] <= times[:, None]


def auroc_pooled(survival, e_rows) -> float:
    """AUROC of per-interval survival against the at-risk row of the labels.

    Only observed intervals enter the pool; the observed length of each
    record is recovered from its ``e_row`` as ``sum(e_row) + 1``.
    """
    survival = np.asarray(survival, dtype=np.float64)
    e_rows = np.asarray(e_rows)
    mask = observed_mask(e_rows.sum(axis=1) + 1, survival.shape[1])
    return auroc(survival[mask], e_rows[mask])


def distance_score(t_hat, times) -> float:
    """Mean absolute gap between predicted and true event/censoring intervals.

    Accepts ``TtePrediction`` objects or plain integers; beyond-horizon
    predictions already carry the horizon as ``t_hat``.
    """
    t_hat = [getattr(p, "t_hat", p) for p in t_hat]
    if len(t_hat) == 0:
        raise UndefinedMetricError("distance of an empty prediction list")
    if len(t_hat) != len(times):
        raise ValueError(f"{len(t_hat)} predictions for {len(times)} true times")
    return float(np.mean(np.abs(np.asarray(t_hat, dtype=np.float64) - np.asarray(times, dtype=np.float64))))


def score_std(spreads) -> float:
    """Mean per-record spread of predicted times across ensemble samples."""
    spreads = [getattr(p, "spread", p) for p in spreads]
    return float(np.mean(spreads))


@dataclass
class MetricReport:
    auroc: float | None
    c_index: float | None
    distance_score: float
    score_std: float
    n_records: int
    n_comparable_pairs: int
    per_window: dict = field(default_factory=dict)
    undefined: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


REPORT_KEYS = frozenset(
    ("auroc", "c_index", "distance_score", "score_std", "n_records", "n_comparable_pairs", "per_window",
     "undefined")
)


def evaluate(curves, t_hat, spreads, times, events) -> MetricReport:
    """Compute every metric from mean curves and already-made time predictions."""
    curves = np.asarray(curves, dtype=np.float64)
    times = np.asarray(times, dtype=np.int64)
    events = np.asarray(events, dtype=bool)
    n, horizon = curves.shape

    conc2, pairs = _window_concordance(curves, times, events)
    c_win = [float(c / (2 * p)) if p else None for c, p in zip(conc2.tolist(), pairs.tolist())]

    at_risk = observed_mask(times, horizon)
    e_rows = np.arange(1, horizon + 1)[None, :] < times[:, None]
    a_win = []
    for w in range(horizon):
        rows = at_risk[:, w]
        try:
            a_win.append(float(auroc(curves[rows, w], e_rows[rows, w])))
        except UndefinedMetricError:
            a_win.append(None)

    undefined = {}
    c_vals = [v for v in c_win if v is not None]
    a_vals = [v for v in a_win if v is not None]
    c_index = float(np.mean(c_vals)) if c_vals else None
    if c_index is None:
        undefined["c_index"] = "no comparable pairs in any window"
    auc = float(np.mean(a_vals)) if a_vals else None
    if auc is None:
        undefined["auroc"] = "no window has both at-risk and exiting records"

    return MetricReport(
        auroc=auc,
        c_index=c_index,
        distance_score=distance_score(t_hat, times),
        score_std=score_std(spreads),
        n_records=int(n),
        n_comparable_pairs=int(pairs.sum()),
        per_window={"auroc": a_win, "c_index": c_win, "n_pairs": pairs.tolist()},
        undefined=undefined,
    )


def evaluate_all(samples, times, events, method: str = INFLECTION, *, theta: float | None = None,
                 smoothing_window: int = 3) -> MetricReport:
    """Evaluate ``(n, K, horizon)`` sampled survival curves against observed outcomes."""
    samples = np.asarray(samples, dtype=np.float64)
    t_hat, spread, _ = ensemble_predictions(samples, method, theta=theta, smoothing_window=smoothing_window)
    return evaluate(samples.mean(axis=1), t_hat, spread, times, events)
