"""Linear algebra kernels: weighted products, SPD roots, spectral calculus."""

from .spectral import SpectralData
from .spectral import diagonalize_product
from .spectral import precond_cov_power
from .spectral import pseudo_inverse_gamma
from .spectral import resolvent
from .spectral import spd_sqrt
from .weighted import WeightedNorm
from .weighted import gamma_preimage
from .weighted import gamma_projection
from .weighted import weighted_inner

__all__ = [
    "SpectralData",
    "WeightedNorm",
    "diagonalize_product",
    "gamma_preimage",
    "gamma_projection",
    "precond_cov_power",
    "pseudo_inverse_gamma",
    "resolvent",
    "spd_sqrt",
    "weighted_inner",
]
