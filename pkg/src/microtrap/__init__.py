"""Trapping probabilities, Laplace transforms and subsidy costs for a
capital process with proportional microinsurance."""

from .analytics import expected_trapping_time, laplace_trapping, trapping_probability
from .model import BACKEND, ModelParams, SchemeSpec, SimConfig
from .optimize import optimal_barrier, optimal_theta
from .welfare import WelfareParams, cost_of_social_protection, subsidy_value

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ModelParams",
    "SchemeSpec",
    "SimConfig",
    "WelfareParams",
    "trapping_probability",
    "laplace_trapping",
    "expected_trapping_time",
    "subsidy_value",
    "cost_of_social_protection",
    "optimal_theta",
    "optimal_barrier",
]
