import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from survcurve.data import (
    Cohort,
    ConfigurationError,
    IntegrityError,
    LongitudinalRecord,
    ParseError,
    SchemaError,
    SplitSpec,
    apply_scaler,
    discretize_static,
    fit_scaler,
    load_longitudinal_csv,
    load_static_csv,
    split_cohort,
    split_sizes,
    truncate_horizon,
    write_longitudinal_csv,
)
from survcurve.survival import InvalidInputError, TimeGrid


def make_cohort(lengths, events=None, d=2, horizon=None, seed=0):
    rng = np.random.default_rng(seed)
    events = events if events is not None else [True] * len(lengths)
    recs = [
        LongitudinalRecord(str(i), rng.normal(size=(t, d)), np.zeros(t), t, ev)
        for i, (t, ev) in enumerate(zip(lengths, events))
    ]
    return Cohort(TimeGrid(horizon or max(lengths, default=1)), recs, [f"x{k}" for k in range(d)])


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


WELL_FORMED = """id,time_step,age,bp,treatment,event
a,1,50,120,0,0
a,2,50,125,0,0
a,3,51,130,1,1
b,1,60,140,1,0
b,2,60,141,1,0
b,3,61,139,1,0
"""


def test_load_well_formed(tmp_path):
    cohort = load_longitudinal_csv(write(tmp_path, WELL_FORMED))
    assert len(cohort) == 2
    assert cohort.covariate_names == ("age", "bp")
    a, b = cohort.records
    assert a.observed_length == b.observed_length == 3
    assert a.event and not b.event
    np.testing.assert_array_equal(a.treatment, [0, 0, 1])
    assert cohort.grid.horizon == 3


def test_rows_may_arrive_unsorted(tmp_path):
    lines = WELL_FORMED.splitlines()
    text = "\n".join([lines[0], lines[3], lines[1], lines[2], *lines[4:]]) + "\n"
    a = load_longitudinal_csv(write(tmp_path, text)).records[0]
    np.testing.assert_array_equal(a.covariates[:, 1], [120, 125, 130])
    assert a.event


def test_gap_names_the_id(tmp_path):
    text = "id,time_step,x,treatment,event\nz9,1,0,0,0\nz9,2,0,0,0\nz9,4,0,0,1\n"
    with pytest.raises(IntegrityError, match="z9"):
        load_longitudinal_csv(write(tmp_path, text))


def test_header_only_is_empty(tmp_path):
    cohort = load_longitudinal_csv(write(tmp_path, "id,time_step,x,treatment,event\n"))
    assert len(cohort) == 0


def test_missing_column(tmp_path):
    with pytest.raises(SchemaError, match="time_step"):
        load_longitudinal_csv(write(tmp_path, "id,x,event\n1,2,0\n"))


def test_non_numeric_cell(tmp_path):
    text = "id,time_step,x,treatment,event\n1,1,abc,0,0\n"
    with pytest.raises(ParseError, match=r"row 2.*'x'"):
        load_longitudinal_csv(write(tmp_path, text))


def test_missing_treatment_column_is_flagged(tmp_path):
    cohort = load_longitudinal_csv(write(tmp_path, "id,time_step,x,event\n1,1,0.5,1\n"))
    assert not cohort.has_treatment
    np.testing.assert_array_equal(cohort.records[0].treatment, [0])


def test_csv_round_trip(tmp_path):
    cohort = make_cohort([3, 1, 4], [True, False, True])
    path = tmp_path / "out.csv"
    write_longitudinal_csv(cohort, path)
    back = load_longitudinal_csv(path)
    for r, s in zip(cohort.records, back.records):
        assert (r.id, r.observed_length, r.event) == (s.id, s.observed_length, s.event)
        np.testing.assert_array_equal(r.covariates, s.covariates)


@pytest.mark.parametrize("u, window, horizon", [(1714, 50, 34), (1686, 50, 33), (1230, 50, 24), (100, 100, 1)])
def test_discretize_horizon(u, window, horizon):
    times = np.arange(1, u + 1, dtype=float)
    cohort = discretize_static(times, np.ones(u, bool), np.zeros((u, 1)), window)
    assert cohort.grid.horizon == horizon
    assert cohort.grid.window_size == window


def test_single_window_puts_everyone_in_interval_one():
    cohort = discretize_static(np.arange(1, 101.0), np.ones(100, bool), np.zeros((100, 1)), 100)
    assert set(cohort.times.tolist()) == {1}


def test_discretize_rank_rule():
    # 7 unique times, window 2 -> horizon 3; the 5th-ranked time lands in interval 3
    times = np.array([10.0, 20, 30, 40, 50, 60, 70])
    cohort = discretize_static(times, np.ones(7, bool), np.zeros((7, 1)), 2)
    assert cohort.grid.horizon == 3
    np.testing.assert_array_equal(cohort.times, [1, 1, 2, 2, 3, 3, 3])
    assert cohort.records[4].event
    # the 7th time falls in the incomplete 4th window and is censored at the horizon
    assert cohort.records[6].observed_length == 3 and not cohort.records[6].event


def test_discretize_replicates_static_covariates():
    cov = np.array([[1.0, 2.0], [3.0, 4.0]])
    cohort = discretize_static([1.0, 2.0], [True, False], cov, 1)
    r = cohort.records[1]
    assert r.covariates.shape == (2, 2)
    np.testing.assert_array_equal(r.covariates, [[3, 4], [3, 4]])


def test_discretize_window_too_large():
    with pytest.raises(ConfigurationError):
        discretize_static([1.0, 2.0], [True, True], np.zeros((2, 1)), 3)


def test_discretize_rejects_non_positive_times():
    with pytest.raises(InvalidInputError):
        discretize_static([0.0, 2.0], [True, True], np.zeros((2, 1)), 1)


@given(st.lists(st.floats(0.01, 1e4), min_size=2, max_size=60), st.integers(1, 5))
def test_discretize_monotone(times, window):
    times = np.array(times)
    if window > np.unique(times).size:
        return
    cohort = discretize_static(times, np.ones(times.size, bool), np.zeros((times.size, 1)), window)
    order = np.argsort(times, kind="stable")
    assert np.all(np.diff(cohort.times[order]) >= 0)


def test_load_static_csv(tmp_path):
    rows = "\n".join(f"{i},{t},{i % 2},{0.1 * i}" for i, t in enumerate([5.0, 1.0, 3.0, 2.0, 4.0]))
    path = write(tmp_path, "id,raw_time,event,age\n" + rows + "\n")
    cohort = load_static_csv(path, 2)
    assert cohort.grid.horizon == 2
    assert cohort.covariate_names == ("age",)
    assert not cohort.has_treatment
    np.testing.assert_array_equal(cohort.times, [2, 1, 2, 1, 2])


def test_truncate_examples():
    cohort = make_cohort([25, 5], [True, True], horizon=30)
    cut = truncate_horizon(cohort, 20)
    long, short = cut.records
    assert (long.observed_length, long.event) == (20, False)
    assert long.covariates.shape[0] == 20
    assert (short.observed_length, short.event) == (5, True)
    assert cut.grid.horizon == 20


def test_truncate_event_exactly_at_limit_is_kept():
    cut = truncate_horizon(make_cohort([20], [True], horizon=30), 20)
    assert cut.records[0].event


def test_truncate_empty():
    empty = Cohort(TimeGrid(5), [], ["x"])
    assert truncate_horizon(empty, 20).grid.horizon == 20


@given(st.lists(st.tuples(st.integers(1, 40), st.booleans()), max_size=30), st.integers(1, 40))
def test_truncate_never_creates_events(items, max_steps):
    lengths = [t for t, _ in items]
    events = [e for _, e in items]
    cohort = make_cohort(lengths, events, horizon=40)
    cut = truncate_horizon(cohort, max_steps)
    for before, after in zip(cohort.records, cut.records):
        assert after.event <= before.event


def test_split_sizes_ten():
    train, val, test = split_cohort(make_cohort([1] * 10), SplitSpec(0.7, 0.1, 0.2, seed=3))
    assert (len(train), len(val), len(test)) == (7, 1, 2)


def test_split_sizes_three():
    sizes = split_sizes(3, (0.7, 0.1, 0.2))
    assert sum(sizes) == 3
    assert all(abs(s - 3 * f) <= 1 for s, f in zip(sizes, (0.7, 0.1, 0.2)))


def test_split_is_deterministic():
    cohort = make_cohort([1] * 50)
    a = split_cohort(cohort, SplitSpec(seed=42))
    b = split_cohort(cohort, SplitSpec(seed=42))
    assert [p.ids for p in a] == [p.ids for p in b]
    c = split_cohort(cohort, SplitSpec(seed=43))
    assert [p.ids for p in a] != [p.ids for p in c]


@settings(max_examples=50)
@given(st.integers(0, 60), st.integers(0, 2**63 - 1))
def test_split_is_partition(n, seed):
    cohort = make_cohort([1] * n) if n else Cohort(TimeGrid(1), [], ["x0", "x1"])
    parts = split_cohort(cohort, SplitSpec(seed=seed))
    ids = [i for p in parts for i in p.ids]
    assert sorted(ids) == sorted(cohort.ids)
    assert len(set(ids)) == len(ids)
    for p, f in zip(parts, (0.7, 0.1, 0.2)):
        assert abs(len(p) - n * f) <= 1


@pytest.mark.parametrize("fractions", [(0.7, 0.1, 0.1), (0.8, 0.0, 0.2), (1.2, -0.1, -0.1)])
def test_split_spec_validation(fractions):
    with pytest.raises(ConfigurationError):
        SplitSpec(*fractions)


def test_scaler_hand_example():
    recs = [
        LongitudinalRecord("a", [[1.0, 5.0]], [0], 1, True),
        LongitudinalRecord("b", [[3.0, 5.0]], [0], 1, True),
    ]
    cohort = Cohort(TimeGrid(1), recs, ["x", "const"])
    scaler = fit_scaler(cohort)
    np.testing.assert_array_equal(scaler.mean, [2.0, 5.0])
    np.testing.assert_array_equal(scaler.scale, [1.0, 1.0])
    scaled = apply_scaler(scaler, cohort)
    np.testing.assert_array_equal([r.covariates[0, 0] for r in scaled.records], [-1.0, 1.0])
    np.testing.assert_array_equal([r.covariates[0, 1] for r in scaled.records], [0.0, 0.0])


def test_scaler_standardises_train_but_not_test():
    rng = np.random.default_rng(0)
    cohort = make_cohort(rng.integers(1, 6, size=80).tolist(), d=3, seed=1)
    train, _, test = split_cohort(cohort, SplitSpec(seed=0))
    scaler = fit_scaler(train)
    rows = np.concatenate([r.covariates for r in apply_scaler(scaler, train).records])
    assert np.all(np.abs(rows.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(rows.std(axis=0) - 1) < 1e-9)
    test_rows = np.concatenate([r.covariates for r in apply_scaler(scaler, test).records])
    assert np.any(np.abs(test_rows.mean(axis=0)) > 1e-6)


def test_scaler_rejects_empty():
    with pytest.raises(InvalidInputError):
        fit_scaler(Cohort(TimeGrid(1), [], ["x"]))


def test_cohort_rejects_duplicate_ids():
    r = LongitudinalRecord("a", [[1.0]], [0], 1, True)
    with pytest.raises(InvalidInputError, match="duplicate"):
        Cohort(TimeGrid(1), [r, r], ["x"])


def test_record_shape_mismatch():
    with pytest.raises(InvalidInputError):
        LongitudinalRecord("a", [[1.0], [2.0]], [0], 1, True)
