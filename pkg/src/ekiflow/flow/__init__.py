"""Closed-form covariance and mean flows, with RK4 oracles."""

from .covariance import ALPHA_DETERMINISTIC
from .covariance import ALPHA_MEAN_FIELD
from .covariance import CovOperatorA
from .covariance import FlowConfig
from .covariance import alpha_averaged
from .covariance import apply_operator_A
from .covariance import asymptotic_profile
from .covariance import covariance_at
from .covariance import covariance_limit
from .covariance import covariance_path
from .covariance import covariance_resolvent_form
from .covariance import self_similar_evolution
from .mean import AsymptoticLimit
from .mean import MeanSolution
from .mean import asymptotic_limit
from .mean import map_estimator
from .mean import map_gradient
from .mean import mean_at
from .mean import mean_path
from .mean import mean_solution
from .mean import minimal_norm_solution
from .mean import rate_certificates
from .mean import rate_errors
from .mean import solution_with_truth
from .mean import strip_orthogonal_data
from .oracle import integrate_covariance_ode
from .oracle import integrate_moment_odes
from .oracle import rk4_integrate
from .oracle import rk4_step

__all__ = [
    "ALPHA_DETERMINISTIC",
    "ALPHA_MEAN_FIELD",
    "AsymptoticLimit",
    "CovOperatorA",
    "FlowConfig",
    "MeanSolution",
    "alpha_averaged",
    "apply_operator_A",
    "asymptotic_limit",
    "asymptotic_profile",
    "covariance_at",
    "covariance_limit",
    "covariance_path",
    "covariance_resolvent_form",
    "integrate_covariance_ode",
    "integrate_moment_odes",
    "map_estimator",
    "map_gradient",
    "mean_at",
    "mean_path",
    "mean_solution",
    "minimal_norm_solution",
    "rate_certificates",
    "rate_errors",
    "rk4_integrate",
    "rk4_step",
    "self_similar_evolution",
    "solution_with_truth",
    "strip_orthogonal_data",
]
