"""Cohort ingestion, time discretisation, splitting and covariate scaling."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .survival import InvalidInputError, TimeGrid


class DataError(ValueError):
    """Base class for problems with input data."""


class SchemaError(DataError):
    pass


class IntegrityError(DataError):
    pass


class ParseError(DataError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class LongitudinalRecord:
    """One individual's history.

    ``covariates`` has one row per observed interval; ``event`` tells whether
    the record ends with an event (True) or censoring (False) at
    ``observed_length``.
    """

    id: str
    covariates: np.ndarray
    treatment: np.ndarray
    observed_length: int
    event: bool

    def __post_init__(self):
        cov = np.asarray(self.covariates, dtype=np.float64)
        if cov.ndim != 2:
            raise InvalidInputError(f"record {self.id}: covariates must be 2-D")
        trt = np.asarray(self.treatment, dtype=np.int8).reshape(-1)
        if not (cov.shape[0] == trt.shape[0] == int(self.observed_length)):
            raise InvalidInputError(
                f"record {self.id}: covariate rows {cov.shape[0]}, treatment length "
                f"{trt.shape[0]} and observed_length {self.observed_length} disagree"
            )
        if int(self.observed_length) < 1:
            raise InvalidInputError(f"record {self.id}: observed_length must be >= 1")
        cov.setflags(write=False)
        trt.setflags(write=False)
        object.__setattr__(self, "covariates", cov)
        object.__setattr__(self, "treatment", trt)
        object.__setattr__(self, "observed_length", int(self.observed_length))
        object.__setattr__(self, "event", bool(self.event))


@dataclass(frozen=True)
class Cohort:
    grid: TimeGrid
    records: tuple[LongitudinalRecord, ...]
    covariate_names: tuple[str, ...]
    has_treatment: bool = True

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        d = len(self.covariate_names)
        seen = set()
        for r in self.records:
            if r.covariates.shape[1] != d:
                raise InvalidInputError(f"record {r.id} has {r.covariates.shape[1]} covariates, expected {d}")
            if r.observed_length > self.grid.horizon:
                raise InvalidInputError(
                    f"record {r.id} observed_length {r.observed_length} exceeds horizon {self.grid.horizon}"
                )
            if r.id in seen:
                raise InvalidInputError(f"duplicate id {r.id}")
            seen.add(r.id)

    def __len__(self):
        return len(self.records)

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    @property
    def times(self) -> np.ndarray:
        return np.array([r.observed_length for r in self.records], dtype=np.int64)

    @property
    def events(self) -> np.ndarray:
        return np.array([r.event for r in self.records], dtype=bool)

    def subset(self, ids: Sequence[str]) -> "Cohort":
        by_id = {r.id: r for r in self.records}
        return replace(self, records=tuple(by_id[i] for i in ids))


@dataclass(frozen=True)
class CsvSchema:
    """Column names for the longitudinal CSV layout.

    ``covariates=None`` takes every column not otherwise named.  A missing
    treatment column is tolerated: treatment is then all zeros and the cohort
    is flagged ``has_treatment=False``.
    """

    id: str = "id"
    time_step: str = "time_step"
    treatment: str = "treatment"
    event: str = "event"
    covariates: tuple[str, ...] | None = None
    horizon: int | None = None
    step_label: str = "interval"


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    validation_fraction: float = 0.1
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_fraction, self.validation_fraction, self.test_fraction)
        if any(f <= 0 for f in fr):
            raise ConfigurationError(f"split fractions must be positive, got {fr}")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ConfigurationError(f"split fractions must sum to 1, got {sum(fr)!r}")


@dataclass(frozen=True)
class CovariateScaler:
    mean: np.ndarray
    scale: np.ndarray = field(repr=False)


def _parse_int(value: str, row: int, col: str) -> int:
    try:
        f = float(value)
    except ValueError:
        raise ParseError(f"row {row}, column {col!r}: expected an integer, got {value!r}") from None
    if not f.is_integer():
        raise ParseError(f"row {row}, column {col!r}: expected an integer, got {value!r}")
    return int(f)


def _parse_float(value: str, row: int, col: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"row {row}, column {col!r}: non-numeric value {value!r}") from None


def load_longitudinal_csv(path, schema: CsvSchema = CsvSchema()) -> Cohort:
    """Read a long-format CSV with one row per (id, time_step).

    Time steps must run contiguously from 1 for every id.  The event flag is
    read from each id's last row.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (schema.id, schema.time_step, schema.event):
            if col not in header:
                raise SchemaError(f"missing column {col!r} in {path}")
        has_treatment = schema.treatment in header
        if schema.covariates is None:
            named = {schema.id, schema.time_step, schema.treatment, schema.event}
            cov_names = tuple(c for c in header if c not in named)
        else:
            cov_names = tuple(schema.covariates)
            for col in cov_names:
                if col not in header:
                    raise SchemaError(f"missing column {col!r} in {path}")

        rows: dict[str, list[tuple[int, list[float], int, int]]] = {}
        for lineno, row in enumerate(reader, start=2):
            step = _parse_int(row[schema.time_step], lineno, schema.time_step)
            cov = [_parse_float(row[c], lineno, c) for c in cov_names]
            trt = _parse_int(row[schema.treatment], lineno, schema.treatment) if has_treatment else 0
            ev = _parse_int(row[schema.event], lineno, schema.event)
            rows.setdefault(row[schema.id], []).append((step, cov, trt, ev))

    records = []
    for rid, items in rows.items():
        items.sort(key=lambda it: it[0])
        steps = [it[0] for it in items]
        if steps != list(range(1, len(steps) + 1)):
            raise IntegrityError(f"id {rid!r}: time steps {steps} are not contiguous from 1")
        records.append(
            LongitudinalRecord(
                id=rid,
                covariates=np.array([it[1] for it in items], dtype=np.float64).reshape(len(items), len(cov_names)),
                treatment=np.array([it[2] for it in items], dtype=np.int8),
                observed_length=len(items),
                event=bool(items[-1][3]),
            )
        )
    horizon = schema.horizon
    if horizon is None:
        horizon = max((r.observed_length for r in records), default=1)
    return Cohort(TimeGrid(horizon, schema.step_label), records, cov_names, has_treatment)


def discretize_static(raw_times, raw_events, covariates, window: int, *, ids=None, treatment=None,
                      covariate_names=None, step_label: str = "window") -> Cohort:
    """Fold continuous follow-up times into windows of ``window`` unique time points.

    The horizon counts complete windows only, ``floor(U / window)`` for ``U``
    unique raw times.  Raw times map to ``ceil(rank / window)`` where ``rank``
    is the 1-based position among the sorted unique times; anyone landing in
    the incomplete trailing window is censored at the horizon.
    """
    raw_times = np.asarray(raw_times, dtype=np.float64)
    raw_events = np.asarray(raw_events, dtype=bool)
    covariates = np.asarray(covariates, dtype=np.float64)
    if covariates.ndim == 1:
        covariates = covariates[:, None]
    window = int(window)
    if window < 1:
        raise ConfigurationError(f"window must be >= 1, got {window}")
    if np.any(raw_times <= 0):
        raise InvalidInputError("raw times must be positive")
    unique = np.unique(raw_times)
    if window > unique.size:
        raise ConfigurationError(f"window {window} exceeds the {unique.size} unique time points")
    horizon = unique.size // window
    ranks = np.searchsorted(unique, raw_times) + 1
    intervals = -(-ranks // window)
    n = raw_times.size
    ids = [str(i) for i in range(n)] if ids is None else [str(i) for i in ids]
    has_treatment = treatment is not None
    treatment = np.zeros(n, dtype=np.int8) if treatment is None else np.asarray(treatment, dtype=np.int8)
    names = covariate_names or [f"x{k + 1}" for k in range(covariates.shape[1])]
    records = []
    for i in range(n):
        length = int(intervals[i])
        event = bool(raw_events[i])
        if length > horizon:
            length, event = horizon, False
        records.append(
            LongitudinalRecord(
                id=ids[i],
                covariates=np.repeat(covariates[i : i + 1], length, axis=0),
                treatment=np.full(length, treatment[i], dtype=np.int8),
                observed_length=length,
                event=event,
            )
        )
    return Cohort(TimeGrid(horizon, step_label, window), records, names, has_treatment)


def load_static_csv(path, window: int, *, id_col="id", time_col="raw_time", event_col="event",
                    treatment_col="treatment") -> Cohort:
    """Read a one-row-per-id static CSV and discretise it with :func:`discretize_static`."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (id_col, time_col, event_col):
            if col not in header:
                raise SchemaError(f"missing column {col!r} in {path}")
        has_treatment = treatment_col in header
        cov_names = [c for c in header if c not in {id_col, time_col, event_col, treatment_col}]
        ids, times, events, trt, cov = [], [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            ids.append(row[id_col])
            times.append(_parse_float(row[time_col], lineno, time_col))
            events.append(_parse_int(row[event_col], lineno, event_col))
            trt.append(_parse_int(row[treatment_col], lineno, treatment_col) if has_treatment else 0)
            cov.append([_parse_float(row[c], lineno, c) for c in cov_names])
    return discretize_static(
        times, events, np.array(cov, dtype=np.float64).reshape(len(ids), len(cov_names)), window,
        ids=ids, treatment=trt if has_treatment else None, covariate_names=cov_names,
    )


def truncate_horizon(cohort: Cohort, max_steps: int) -> Cohort:
    """Keep only the first ``max_steps`` intervals of every record.

    Records running past ``max_steps`` are cut there and censored; events at or
    before ``max_steps`` are untouched.
    """
    max_steps = int(max_steps)
    if max_steps < 1:
        raise ConfigurationError(f"max_steps must be >= 1, got {max_steps}")
    out = []
    for r in cohort.records:
        if r.observed_length > max_steps:
            r = LongitudinalRecord(r.id, r.covariates[:max_steps], r.treatment[:max_steps], max_steps, False)
        out.append(r)
    return replace(cohort, grid=replace(cohort.grid, horizon=max_steps), records=tuple(out))


def split_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``n`` items; each size is within 1 of exact."""
    exact = [n * f for f in fractions]
    sizes = [math.floor(e) for e in exact]
    order = sorted(range(len(exact)), key=lambda k: (-(exact[k] - sizes[k]), k))
    for k in order[: n - sum(sizes)]:
        sizes[k] += 1
    return sizes


def split_cohort(cohort: Cohort, spec: SplitSpec = SplitSpec()) -> tuple[Cohort, Cohort, Cohort]:
    """Seeded random partition of records into train / validation / test."""
    n = len(cohort)
    n_train, n_val, _ = split_sizes(n, (spec.train_fraction, spec.validation_fraction, spec.test_fraction))
    perm = np.random.default_rng(spec.seed).permutation(n)
    recs = cohort.records
    parts = (perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :])
    return tuple(replace(cohort, records=tuple(recs[i] for i in sorted(p))) for p in parts)


def fit_scaler(train: Cohort) -> CovariateScaler:
    """Per-column mean and population standard deviation over all training rows."""
    if len(train) == 0:
        raise InvalidInputError("cannot fit a scaler on an empty cohort")
    rows = np.concatenate([r.covariates for r in train.records], axis=0)
    mean = rows.mean(axis=0)
    sd = rows.std(axis=0)
    sd[sd == 0] = 1.0
    return CovariateScaler(mean, sd)


def apply_scaler(scaler: CovariateScaler, cohort: Cohort) -> Cohort:
    recs = tuple(
        replace(r, covariates=(r.covariates - scaler.mean) / scaler.scale) for r in cohort.records
    )
    return replace(cohort, records=recs)


def write_longitudinal_csv(cohort: Cohort, path) -> None:
    """Write ``cohort`` in the layout read by :func:`load_longitudinal_csv`."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "time_step", *cohort.covariate_names, "treatment", "event"])
        for r in cohort.records:
            for t in range(r.observed_length):
                last = t == r.observed_length - 1
                w.writerow([r.id, t + 1, *(repr(float(v)) for v in r.covariates[t]),
                            int(r.treatment[t]), int(r.event and last)])
