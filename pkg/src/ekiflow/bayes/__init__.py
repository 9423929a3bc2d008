"""Exact Gaussian posterior, the reference for posterior recovery."""

from .posterior import GaussianMeasure
from .posterior import exact_posterior
from .posterior import exact_posterior_information_form
from .posterior import posterior_gap
from .posterior import posterior_non_recovery

__all__ = [
    "GaussianMeasure",
    "exact_posterior",
    "exact_posterior_information_form",
    "posterior_gap",
    "posterior_non_recovery",
]
