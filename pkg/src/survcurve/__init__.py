"""Discrete-time survival curves from recurrent hazard models.

Hazard/survival algebra, cohort handling, a synthetic ground-truth
generator, a numpy GRU hazard model, inflection-point and threshold
event-time prediction, and evaluation metrics.
"""
from .survival import (
    InvalidInputError,
    LabelMatrix,
    TimeGrid,
    build_label_matrix,
    event_time_pmf,
    hazard_to_survival,
    kaplan_meier,
    survival_to_hazard,
)

__version__ = "0.1.0"

__all__ = [
    "InvalidInputError", "LabelMatrix", "TimeGrid", "build_label_matrix", "event_time_pmf",
    "hazard_to_survival", "kaplan_meier", "survival_to_hazard", "__version__",
]
