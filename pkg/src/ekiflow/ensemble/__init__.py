"""Particle simulation of ensemble Kalman inversion."""

from .continuous import average_moments
from .continuous import propagate_closed_form
from .continuous import run_deterministic
from .continuous import run_replicates
from .continuous import run_stochastic
from .continuous import step_halving_check
from .continuous import subspace_check
from .discrete import discrete_step
from .discrete import iterate_discrete
from .discrete import variational_equivalence_check
from .ensemble import Ensemble
from .ensemble import EnsembleTrajectory
from .ensemble import empirical_moments
from .ensemble import init_from_prior
from .sim_config import Scheme
from .sim_config import SigmaMode
from .sim_config import SimConfig

__all__ = [
    "Ensemble",
    "EnsembleTrajectory",
    "Scheme",
    "SigmaMode",
    "SimConfig",
    "average_moments",
    "discrete_step",
    "empirical_moments",
    "init_from_prior",
    "iterate_discrete",
    "propagate_closed_form",
    "run_deterministic",
    "run_replicates",
    "run_stochastic",
    "step_halving_check",
    "subspace_check",
    "variational_equivalence_check",
]
