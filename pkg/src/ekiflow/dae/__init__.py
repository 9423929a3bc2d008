"""Eigenvalue/eigenvector system of the covariance flow."""

from .dae import compare_with_covariance
from .dae import convexity_check
from .dae import dae_rhs
from .dae import eigenvalue_bounds
from .dae import initial_state
from .dae import integrate_dae
from .eigen_state import CrossingEvent
from .eigen_state import DaeResult
from .eigen_state import EigenState

__all__ = [
    "CrossingEvent",
    "DaeResult",
    "EigenState",
    "compare_with_covariance",
    "convexity_check",
    "dae_rhs",
    "eigenvalue_bounds",
    "initial_state",
    "integrate_dae",
]
