"""Survival curves from discrete hazards
======================================

A discrete-time hazard ``h(t)`` is the chance of the event in interval ``t``
given survival to its start.  Everything else follows from it.
"""
import numpy as np

from survcurve import build_label_matrix, event_time_pmf, hazard_to_survival, survival_to_hazard

# A hazard that starts low and ramps up.
h = np.array([0.02, 0.03, 0.05, 0.10, 0.25, 0.40, 0.40, 0.40])
S = hazard_to_survival(h)
print("hazard   ", np.round(h, 3))
print("survival ", np.round(S, 4))

# The event-time distribution and the mass left beyond the horizon add to one.
pmf = event_time_pmf(h)
print("pmf      ", np.round(pmf, 4))
print("pmf.sum() + S[-1] =", pmf.sum() + S[-1])

# Going back is exact up to rounding.
print("max |h - h'| =", np.abs(survival_to_hazard(S) - h).max())

# %%
# Training targets
# ----------------
# Each record becomes two rows: ``e`` is 1 while the record is known to be
# event-free, ``c`` marks the event interval (all zeros when censored).
for t, event in [(3, True), (3, False)]:
    lab = build_label_matrix(t, event, len(h))
    print(f"t={t} event={event}:  e={lab.e_row.tolist()}  c={lab.c_row.tolist()}")
