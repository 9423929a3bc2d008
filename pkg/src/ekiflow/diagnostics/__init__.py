"""Spreads, residual decompositions and monotonicity diagnostics."""

from .monotonicity import QUANTITIES
from .monotonicity import MonotonicityReport
from .monotonicity import QuantityReport
from .monotonicity import monotonicity_report
from .spreads import SpreadRecord
from .spreads import canonical_reference
from .spreads import compute_spreads
from .spreads import fwd_spread_bound
from .spreads import lyapunov_value
from .spreads import spreads_along

__all__ = [
    "QUANTITIES",
    "MonotonicityReport",
    "QuantityReport",
    "SpreadRecord",
    "canonical_reference",
    "compute_spreads",
    "fwd_spread_bound",
    "lyapunov_value",
    "monotonicity_report",
    "spreads_along",
]
