"""A synthetic cohort with a known hazard
========================================

Covariates are static draws, treatment is a coin flip and the true hazard is
logistic in covariates, time and treatment.  Because the hazards are kept,
any estimate can be checked against them.
"""
import numpy as np

from survcurve import hazard_to_survival, kaplan_meier
from survcurve.synthetic import SyntheticSpec, generate_cohort

spec = SyntheticSpec(n=2000, horizon=20, d=5, seed=1)
cohort, oracle = generate_cohort(spec)

print(f"records: {len(cohort)}   horizon: {cohort.grid.horizon}")
print(f"events: {cohort.events.mean():.1%}   censored: {1 - cohort.events.mean():.1%}")
print(f"administratively censored at the horizon: {np.mean(~cohort.events & (cohort.times == 20)):.1%}")

# %%
# The population curve
# --------------------
# Kaplan-Meier on the sample tracks the average of the true individual curves.
km = kaplan_meier(cohort.times, cohort.events, spec.horizon)
truth = hazard_to_survival(oracle.hazards).mean(axis=0)
for t in (1, 5, 10, 15, 20):
    print(f"t={t:2d}   KM {km[t - 1]:.3f}   true mean {truth[t - 1]:.3f}")

# %%
# Treatment shifts the log-odds by ``tau``.
treated = np.array([r.treatment[0] == 1 for r in cohort.records])
curves = hazard_to_survival(oracle.hazards)
print("mean S(20) treated %.3f, control %.3f" % (curves[treated, -1].mean(), curves[~treated, -1].mean()))
