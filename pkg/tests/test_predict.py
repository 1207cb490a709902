import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from survcurve.predict import (
    INFLECTION,
    THRESHOLD,
    ThresholdModel,
    ensemble_predict,
    ensemble_predictions,
    fit_threshold,
    inflection_time,
    predicted_times,
    second_differences,
    smooth,
    threshold_time,
)
from survcurve.survival import InvalidInputError, hazard_to_survival

HAND_CURVE = [1.0, 0.98, 0.90, 0.55, 0.18, 0.08, 0.05]


def logistic_curve(k, t0=25, horizon=50):
    t = np.arange(1, horizon + 1)
    return 1.0 / (1.0 + np.exp(k * (t - t0)))


def single_jump_curve(rng, horizon=50):
    t_star = int(rng.integers(5, horizon - 4))
    h = np.full(horizon, rng.uniform(0.002, 0.03))
    h[t_star - 1 :] = rng.uniform(0.15, 0.6)
    return hazard_to_survival(h), t_star


@pytest.mark.parametrize("k", [0.2, 0.5, 1.0])
def test_logistic_inflection(k):
    assert abs(inflection_time(logistic_curve(k)).t_hat - 25) <= 1


def test_flat_curve_is_beyond_horizon():
    pred = inflection_time(np.ones(10))
    assert pred.beyond_horizon and pred.t_hat == 10


def test_hand_curve_second_differences():
    # hand arithmetic: 0.90-1.96+1.0, 0.55-1.80+0.98, 0.18-1.10+0.90, 0.08-0.36+0.55, 0.05-0.16+0.18
    np.testing.assert_allclose(second_differences(HAND_CURVE), [-0.06, -0.27, -0.02, 0.27, 0.07], atol=1e-12)


def test_hand_curve_inflection_unsmoothed():
    # the first non-positive -> positive change is between t=4 (-0.02) and t=5 (+0.27)
    assert inflection_time(HAND_CURVE, smoothing_window=1).t_hat == 5


def test_short_curve_rejected():
    with pytest.raises(InvalidInputError):
        inflection_time([1.0, 0.5])


@pytest.mark.parametrize("window", [0, 2, -1])
def test_bad_smoothing_window(window):
    with pytest.raises(InvalidInputError):
        smooth(np.ones(5), window)


def test_smoothing_shrinks_at_edges():
    np.testing.assert_allclose(smooth([1.0, 0.7, 0.4, 0.1], 3), [1.0, 0.7, 0.4, 0.1])
    np.testing.assert_allclose(smooth([1.0, 0.9, 0.3, 0.2, 0.0], 5), [1.0, 2.2 / 3, 0.48, 0.5 / 3, 0.0])


def test_single_jump_property():
    rng = np.random.default_rng(0)
    hits = 0
    for _ in range(200):
        curve, t_star = single_jump_curve(rng)
        hits += abs(inflection_time(curve).t_hat - t_star) <= 1
    assert hits / 200 >= 0.95


@settings(max_examples=100)
@given(arrays(np.float64, st.integers(3, 30), elements=st.floats(0, 0.9)), st.sampled_from([0.25, 0.5, 2.0, 8.0]))
def test_inflection_scale_invariant(h, a):
    curve = hazard_to_survival(h)
    assert inflection_time(a * curve).t_hat == inflection_time(curve).t_hat


@settings(max_examples=100)
@given(arrays(np.float64, st.integers(3, 30), elements=st.floats(0, 0.9)),
       st.floats(0.1, 10), st.floats(-5, 5))
def test_inflection_affine_invariant(h, a, b):
    curve = hazard_to_survival(h)
    assume(np.min(np.abs(second_differences(smooth(curve)))) > 1e-9)
    assert inflection_time(a * curve + b).t_hat == inflection_time(curve).t_hat


@pytest.mark.parametrize("theta, t_hat, beyond", [(0.6, 2, False), (0.05, 3, True), (0.95, 1, False)])
def test_threshold_examples(theta, t_hat, beyond):
    pred = threshold_time([0.9, 0.5, 0.1], theta)
    assert (pred.t_hat, pred.beyond_horizon) == (t_hat, beyond)


@pytest.mark.parametrize("theta", [0.0, 1.0, -0.5])
def test_threshold_domain(theta):
    with pytest.raises(InvalidInputError):
        threshold_time([0.9], theta)
    with pytest.raises(InvalidInputError):
        ThresholdModel(theta)


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 1)),
       st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_threshold_monotone_in_theta(h, t1, t2):
    curve = hazard_to_survival(h)
    lo, hi = sorted((t1, t2))
    assert threshold_time(curve, hi).t_hat <= threshold_time(curve, lo).t_hat


def test_fit_threshold_degenerate_steps():
    times = np.array([2, 5, 3, 7])
    curves = (np.arange(1, 9)[None, :] < times[:, None]).astype(float)
    model = fit_threshold(curves, times)
    assert np.all(predicted_times(curves, THRESHOLD, theta=model.theta_star) == times)


def test_fit_threshold_single_curve_scan_oracle():
    rng = np.random.default_rng(4)
    for _ in range(50):
        curve = hazard_to_survival(rng.uniform(0.01, 0.3, size=20))
        t = int(rng.integers(1, 21))
        theta = fit_threshold(curve[None], [t]).theta_star
        assert threshold_time(curve, theta).t_hat == t


def test_fit_threshold_beats_its_starting_points():
    rng = np.random.default_rng(5)
    curves = hazard_to_survival(rng.uniform(0.0, 0.3, size=(40, 15)))
    times = rng.integers(1, 16, size=40)

    def objective(theta):
        return np.mean(np.abs(predicted_times(curves, THRESHOLD, theta=theta) - times))

    theta = fit_threshold(curves, times).theta_star
    assert objective(theta) <= min(objective(0.5), objective(0.95))


def test_fit_threshold_needs_records():
    with pytest.raises(InvalidInputError):
        fit_threshold(np.zeros((0, 4)), [])


def test_ensemble_spread_hand_example():
    # per-sample threshold predictions 3 and 5, population std 1
    samples = np.array([[0.9, 0.8, 0.4, 0.3, 0.2], [0.9, 0.8, 0.7, 0.6, 0.4]])
    pred = ensemble_predict(samples, THRESHOLD, theta=0.5)
    assert pred.spread == 1.0
    assert pred.t_hat == threshold_time(samples.mean(axis=0), 0.5).t_hat


def test_identical_samples_have_no_spread():
    curve = logistic_curve(0.5, horizon=30, t0=12)
    pred = ensemble_predict(np.tile(curve, (6, 1)))
    assert pred.spread == 0.0
    assert pred.t_hat == inflection_time(curve).t_hat


def test_singleton_ensemble_matches_curve():
    curve = logistic_curve(0.3)
    assert ensemble_predict(curve[None]).t_hat == inflection_time(curve).t_hat


def test_cohort_ensemble_matches_single():
    rng = np.random.default_rng(1)
    samples = hazard_to_survival(rng.uniform(0, 0.3, size=(5, 4, 12)))
    for method, theta in ((INFLECTION, None), (THRESHOLD, 0.6)):
        t_hat, spread, beyond = ensemble_predictions(samples, method, theta=theta)
        for i in range(5):
            single = ensemble_predict(samples[i], method, theta=theta)
            assert (t_hat[i], beyond[i]) == (single.t_hat, single.beyond_horizon)
            assert spread[i] == pytest.approx(single.spread)


def test_unknown_method():
    with pytest.raises(InvalidInputError):
        predicted_times(np.ones((1, 4)), "median")
