import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logit

from survcurve.survival import InvalidInputError, hazard_to_survival, kaplan_meier
from survcurve.synthetic import (
    SyntheticSpec,
    generate_cohort,
    oracle_survival,
    write_oracle_csv,
)


def flat_spec(**kw):
    base = dict(n=10000, horizon=10, d=2, beta=(0.0, 0.0), gamma=0.0, tau=0.0,
                base_logit=float(logit(0.2)), censor_hazard=0.0, seed=7)
    base.update(kw)
    return SyntheticSpec(**base)


def test_constant_hazard_event_fraction():
    cohort, oracle = generate_cohort(flat_spec())
    np.testing.assert_allclose(oracle.hazards, 0.2)
    times, events = cohort.times, cohort.events
    at_risk = np.array([(times >= t).sum() for t in range(1, 11)])
    deaths = np.array([((times == t) & events).sum() for t in range(1, 11)])
    pooled = deaths.sum() / at_risk.sum()
    se = np.sqrt(0.2 * 0.8 / at_risk.sum())
    assert abs(pooled - 0.2) <= 3 * se
    frac = deaths / at_risk
    assert np.all(np.abs(frac - 0.2) <= 4 * np.sqrt(0.2 * 0.8 / at_risk))


def test_certain_censoring():
    cohort, _ = generate_cohort(SyntheticSpec(n=200, censor_hazard=1.0, seed=1))
    assert np.all(cohort.times == 1)
    assert not cohort.events.any()


def test_same_seed_same_cohort():
    a, oa = generate_cohort(SyntheticSpec(n=300, seed=5))
    b, ob = generate_cohort(SyntheticSpec(n=300, seed=5))
    np.testing.assert_array_equal(oa.hazards, ob.hazards)
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.events, b.events)
    for r, s in zip(a.records, b.records):
        np.testing.assert_array_equal(r.covariates, s.covariates)


def test_different_seed_differs():
    a, _ = generate_cohort(SyntheticSpec(n=300, seed=5))
    b, _ = generate_cohort(SyntheticSpec(n=300, seed=6))
    assert not np.array_equal(a.times, b.times)


def test_km_matches_population_oracle():
    spec = SyntheticSpec(n=10000, horizon=20, censor_hazard=0.0, seed=3)
    cohort, oracle = generate_cohort(spec)
    km = kaplan_meier(cohort.times, cohort.events, spec.horizon)
    population = hazard_to_survival(oracle.hazards).mean(axis=0)
    assert np.max(np.abs(km - population)) < 0.02


def test_default_censoring_near_forty_percent():
    cohort, _ = generate_cohort(SyntheticSpec())
    assert 0.3 <= 1 - cohort.events.mean() <= 0.5


def test_oracle_survival_and_lookup():
    cohort, oracle = generate_cohort(SyntheticSpec(n=20, seed=2))
    rid = cohort.ids[3]
    np.testing.assert_array_equal(oracle_survival(oracle, rid), hazard_to_survival(oracle.hazards[3]))
    with pytest.raises(KeyError):
        oracle_survival(oracle, "nope")


def test_oracle_hazard_formula():
    spec = SyntheticSpec(n=5, horizon=4, d=2, beta=(1.0, -2.0), gamma=0.3, tau=0.7, base_logit=-1.0, seed=9)
    cohort, oracle = generate_cohort(spec)
    for k, rec in enumerate(cohort.records):
        x = rec.covariates[0]
        a = rec.treatment[0]
        lin = -1.0 + x[0] - 2.0 * x[1] + 0.7 * a + 0.3 * np.arange(1, 5)
        np.testing.assert_allclose(oracle.hazards[k], 1 / (1 + np.exp(-lin)), rtol=1e-13)
        assert np.all(rec.covariates == x)


def test_oracle_csv(tmp_path):
    _, oracle = generate_cohort(SyntheticSpec(n=3, horizon=4, seed=0))
    path = tmp_path / "oracle.csv"
    write_oracle_csv(oracle, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "id,t,true_hazard"
    assert len(lines) == 1 + 3 * 4
    rid, t, h = lines[1].split(",")
    assert (rid, t) == ("0", "1") and float(h) == oracle.hazards[0, 0]


@pytest.mark.parametrize("kw", [{"n": 0}, {"d": 0}, {"treat_prob": 1.5}, {"censor_hazard": -0.1}, {"beta": (1.0,)}])
def test_spec_validation(kw):
    with pytest.raises(InvalidInputError):
        SyntheticSpec(**kw)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 30), st.floats(0, 1), st.floats(-6, 2), st.integers(0, 2**32))
def test_observed_within_horizon(horizon, censor, base, seed):
    cohort, oracle = generate_cohort(
        SyntheticSpec(n=50, horizon=horizon, censor_hazard=censor, base_logit=base, seed=seed))
    assert np.all((cohort.times >= 1) & (cohort.times <= horizon))
    assert oracle.hazards.shape == (50, horizon)
