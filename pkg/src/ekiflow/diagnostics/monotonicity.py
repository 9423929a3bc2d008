"""Detection of increases in recorded spread quantities."""

# stdlib
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

from ekiflow.config import Config

from .spreads import SpreadRecord

QUANTITIES = (
    "V_e",
    "V_r",
    "fV_e",
    "fV_r",
    "mean_residual_norm",
    "lyapunov",
)


class QuantityReport:
    """Monotonicity of one recorded quantity.

    Attributes:
        monotone (bool): No increase above the tolerance.
        first_violation (Optional[Tuple[float, float]]): Earliest interval
            (t_k, t_{k+1}) with an increase.
        max_increase (float): Largest discrete difference q_{k+1} − q_k.
    """

    __slots__ = {"monotone", "first_violation", "max_increase"}

    def __init__(
        self,
        monotone: bool,
        first_violation: Optional[Tuple[float, float]],
        max_increase: float,
    ) -> None:
        """Initializer for the QuantityReport.

        Args:
            monotone (bool): No increase above tolerance.
            first_violation (Optional[Tuple[float, float]]): First violating interval.
            max_increase (float): Largest discrete difference.
        """
        self.monotone = monotone
        self.first_violation = first_violation
        self.max_increase = max_increase


class MonotonicityReport:
    """Per-quantity monotonicity reports.

    Attributes:
        quantities (Dict[str, QuantityReport]): Reports keyed by quantity name.
    """

    __slots__ = {"quantities"}

    def __init__(self, quantities: Dict[str, QuantityReport]) -> None:
        """Initializer for the MonotonicityReport.

        Args:
            quantities (Dict[str, QuantityReport]): Reports by name.
        """
        self.quantities = quantities

    def __getitem__(self, name: str) -> QuantityReport:
        """Report of a quantity.

        Args:
            name (str): Quantity name.

        Returns:
            QuantityReport: Its report.
        """
        return self.quantities[name]

    def monotone(self, name: str) -> bool:
        """Whether a quantity is non-increasing.

        Args:
            name (str): Quantity name.

        Returns:
            bool: True if no increase was detected.
        """
        return self.quantities[name].monotone

    def to_dict(self) -> Dict[str, bool]:
        """Flatten into {"<name>_monotone": bool}.

        Returns:
            Dict[str, bool]: The flags.
        """
        return {
            f"{name}_monotone": rep.monotone for name, rep in self.quantities.items()
        }


def _check_series(
    times: List[float], values: List[float], config: Config
) -> QuantityReport:
    scale = max(abs(v) for v in values)
    threshold = config.monotone_atol + config.monotone_rtol * scale

    first_violation = None
    max_increase = -float("inf")
    for k in range(len(values) - 1):
        increase = values[k + 1] - values[k]
        max_increase = max(max_increase, increase)
        if first_violation is None and increase > threshold:
            first_violation = (times[k], times[k + 1])

    return QuantityReport(
        monotone=first_violation is None,
        first_violation=first_violation,
        max_increase=max_increase,
    )


def monotonicity_report(
    records: List[SpreadRecord], config: Optional[Config] = None
) -> MonotonicityReport:
    """Flag every recorded quantity that increases somewhere along the records.

    An increase counts when q_{k+1} − q_k > monotone_atol + monotone_rtol·max|q|.
    The Lyapunov value is only checked when every record carries one.

    Args:
        records (List[SpreadRecord]): Records ordered in time.
        config (Optional[Config]): Tolerances.

    Returns:
        MonotonicityReport: The report.

    Raises:
        ValueError: If fewer than 2 records are given.
    """
    if len(records) < 2:
        raise ValueError(f"Monotonicity needs at least 2 records, got {len(records)}")
    config = config or Config()

    times = [record.t for record in records]
    reports = {}
    for name in QUANTITIES:
        values = [getattr(record, name) for record in records]
        if any(value is None for value in values):
            continue
        reports[name] = _check_series(times, values, config)

    return MonotonicityReport(reports)
