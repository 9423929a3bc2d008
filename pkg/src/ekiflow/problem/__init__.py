"""Linear inverse problems."""

from .inverse_problem import InverseProblem

__all__ = ["InverseProblem"]
