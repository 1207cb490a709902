"""When does the event happen?
=============================

A survival curve has to be turned into a single predicted interval.  The
threshold rule picks the first interval where ``S(t)`` drops below some
``theta``; the answer moves a lot with ``theta``.  The inflection rule picks
the first turn from concave to convex and needs no tuning.

This demo uses the true curves of a synthetic cohort so that the comparison
is about the rules, not about model error.
"""
import numpy as np

from survcurve import hazard_to_survival
from survcurve.metrics import distance_score
from survcurve.predict import INFLECTION, THRESHOLD, fit_threshold, inflection_time, predicted_times
from survcurve.synthetic import SyntheticSpec, generate_cohort

cohort, oracle = generate_cohort(SyntheticSpec(seed=3))
curves = hazard_to_survival(oracle.hazards)

print("theta    mean signed error   distance")
for theta in (0.90, 0.95, 0.99, 0.999, 0.9999):
    err = predicted_times(curves, THRESHOLD, theta=theta) - cohort.times
    print(f"{theta:<8} {err.mean():>17.2f} {np.abs(err).mean():>10.2f}")

fitted = fit_threshold(curves, cohort.times)
print(f"\nthreshold fitted by Nelder-Mead: {fitted.theta_star:.3f}, distance "
      f"{distance_score(predicted_times(curves, THRESHOLD, theta=fitted.theta_star), cohort.times):.2f}")
print(f"inflection rule, no tuning:       distance "
      f"{distance_score(predicted_times(curves, INFLECTION), cohort.times):.2f}")

# %%
# A single curve, step by step.
curve = curves[0]
pred = inflection_time(curve)
print("\nrecord 0 curve:", np.round(curve, 3))
print("inflection at interval", pred.t_hat, "(beyond horizon)" if pred.beyond_horizon else "")
