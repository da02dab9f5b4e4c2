"""Variance-adaptive sample-level DRO training toolkit.

Core pieces: an exact water-filling solver for the per-sample KL-box inner
maximization, online per-sample loss variance tracking with budget
assignment, a warmup/ramp cap schedule, desk-scale differentiable
classifiers, ERM and global KL-DRO baseline weighters, and a seeded
experiment harness. A FastAPI service exposes the same operations over
HTTP; the ``vardro`` CLI is a thin client of that service.
"""

__version__ = "0.1.0"

from .baselines import KlBudget, kl_dro_weights, uniform_weights
from .config import ExperimentConfig
from .schedule import RampSchedule
from .solver import box_bounds, lp_oracle, robust_objective, water_fill
from .tracking import SampleStatsStore, assign_budgets, ema_update, normalize_variances
from .training import build_datasets, evaluate, train

__all__ = [
    "__version__",
    "ExperimentConfig",
    "KlBudget",
    "RampSchedule",
    "SampleStatsStore",
    "assign_budgets",
    "box_bounds",
    "build_datasets",
    "ema_update",
    "evaluate",
    "kl_dro_weights",
    "lp_oracle",
    "normalize_variances",
    "robust_objective",
    "train",
    "uniform_weights",
    "water_fill",
]
