"""Simulation settings for particle runs."""

# stdlib
from enum import Enum
import logging
from typing import Union

logger = logging.getLogger(__name__)


class SigmaMode(Enum):
    """Noise level of the particle dynamics: Σ = 0 or Σ = Γ."""

    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


class Scheme(Enum):
    """Time stepping scheme."""

    RK4 = "rk4"
    EULER_MARUYAMA = "euler_maruyama"


class SimConfig:
    """Time stepping of a particle simulation.

    Attributes:
        sigma_mode (SigmaMode): Deterministic (Σ = 0) or stochastic (Σ = Γ).
        dt (float): Maximal step size.
        t_end (float): Final time.
        scheme (Scheme): RK4 or Euler-Maruyama (forced for stochastic runs).
        sigma_scale (float): Σ = sigma_scale·Γ in stochastic mode.
        record_every (int): Record the ensemble every record_every steps.
    """

    __slots__ = {"sigma_mode", "dt", "t_end", "scheme", "sigma_scale", "record_every"}

    def __init__(
        self,
        sigma_mode: Union[SigmaMode, str] = SigmaMode.DETERMINISTIC,
        dt: float = 1e-3,
        t_end: float = 1.0,
        scheme: Union[Scheme, str, None] = None,
        sigma_scale: float = 1.0,
        record_every: int = 1,
    ) -> None:
        """Initializer for the SimConfig.

        Args:
            sigma_mode (Union[SigmaMode, str]): Noise level.
            dt (float): Step size. Defaults to 1e-3.
            t_end (float): Final time. Defaults to 1.
            scheme (Union[Scheme, str, None]): Scheme. Defaults to RK4 for
                deterministic and Euler-Maruyama for stochastic runs.
            sigma_scale (float): Scale of Σ relative to Γ. Defaults to 1.
            record_every (int): Recording stride in steps. Defaults to 1.

        Raises:
            ValueError: If a value is out of range or an enum name is unknown.
        """
        self.sigma_mode = SigmaMode(sigma_mode)
        if scheme is None:
            scheme = (
                Scheme.RK4
                if self.sigma_mode is SigmaMode.DETERMINISTIC
                else Scheme.EULER_MARUYAMA
            )
        self.scheme = Scheme(scheme)

        if dt <= 0:
            raise ValueError(f"dt should be positive, got {dt}")
        if t_end < 0:
            raise ValueError(f"t_end should be non negative, got {t_end}")
        if sigma_scale < 0:
            raise ValueError(f"sigma_scale should be non negative, got {sigma_scale}")
        if record_every < 1:
            raise ValueError(f"record_every should be positive, got {record_every}")

        if self.sigma_mode is SigmaMode.STOCHASTIC and self.scheme is Scheme.RK4:
            logger.warning("Stochastic runs use Euler-Maruyama, ignoring scheme rk4")
            self.scheme = Scheme.EULER_MARUYAMA

        self.dt = float(dt)
        self.t_end = float(t_end)
        self.sigma_scale = float(sigma_scale)
        self.record_every = int(record_every)

    def __str__(self) -> str:
        """Return the string representation of SimConfig.

        Returns:
            str: String representation.
        """
        return (
            f"[{type(self).__name__}]: {self.sigma_mode.value}, "
            f"{self.scheme.value}, dt={self.dt}, t_end={self.t_end}"
        )
