"""Numerical tolerances and runtime options shared by the library."""

# stdlib
from dataclasses import dataclass
from dataclasses import field
import os
from typing import Optional

THREADS_ENV_VAR = "EKI_THREADS"


@dataclass
class Config:
    """Library configuration.

    Attributes:
        tol_sym (float): Relative tolerance for symmetry checks.
        tol_rank (float): Eigenvalues μᵢ ≤ tol_rank·μ₁ are treated as zero.
        tol_eig (float): Relative tolerance for negative eigenvalues of PSD products.
        tol_degenerate (float): Relative eigenvalue gap (w.r.t. λ₁(0)) below which
            a pair of covariance eigenvalues is treated as degenerate.
        monotone_atol (float): Absolute increase tolerated by monotonicity checks.
        monotone_rtol (float): Relative increase tolerated by monotonicity checks.
        max_workers (Optional[int]): Cap on parallel workers, None means no cap.
    """

    tol_sym: float = field()
    tol_rank: float = field()
    tol_eig: float = field()
    tol_degenerate: float = field()
    monotone_atol: float = field()
    monotone_rtol: float = field()
    max_workers: Optional[int] = field()

    def __init__(
        self,
        tol_sym: float = 1e-12,
        tol_rank: float = 1e-10,
        tol_eig: float = 1e-10,
        tol_degenerate: float = 1e-8,
        monotone_atol: float = 1e-9,
        monotone_rtol: float = 1e-12,
        max_workers: Optional[int] = None,
    ) -> None:
        """Library configuration.

        Config can be passed to any function that depends on a numerical
        tolerance. Functions fall back to ``Config()`` when none is given.

        Args:
            tol_sym (float): Relative tolerance for symmetry checks.
            tol_rank (float): Relative rank threshold for the spectrum of C₀B.
            tol_eig (float): Relative tolerance for negative eigenvalues.
            tol_degenerate (float): Relative degeneracy gap for the DAE.
            monotone_atol (float): Absolute tolerance for monotonicity checks.
            monotone_rtol (float): Relative tolerance for monotonicity checks.
            max_workers (Optional[int]): Cap on parallel workers.

        Raises:
            ValueError: If a tolerance is negative or max_workers is not positive.
        """
        tolerances = {
            "tol_sym": tol_sym,
            "tol_rank": tol_rank,
            "tol_eig": tol_eig,
            "tol_degenerate": tol_degenerate,
            "monotone_atol": monotone_atol,
            "monotone_rtol": monotone_rtol,
        }
        for name, value in tolerances.items():
            if value < 0:
                raise ValueError(f"{name} should be non negative, got {value}")

        if max_workers is not None and max_workers < 1:
            raise ValueError(f"max_workers should be positive, got {max_workers}")

        self.tol_sym = tol_sym
        self.tol_rank = tol_rank
        self.tol_eig = tol_eig
        self.tol_degenerate = tol_degenerate
        self.monotone_atol = monotone_atol
        self.monotone_rtol = monotone_rtol
        self.max_workers = max_workers

    @staticmethod
    def from_env(**kwargs) -> "Config":
        """Build a configuration honouring the EKI_THREADS environment variable.

        Args:
            **kwargs: Forwarded to the constructor.

        Returns:
            Config: The configuration.

        Raises:
            ValueError: If EKI_THREADS is set but is not a positive integer.
        """
        threads = os.environ.get(THREADS_ENV_VAR)
        if threads is not None and threads.strip():
            try:
                kwargs["max_workers"] = int(threads)
            except ValueError:
                raise ValueError(
                    f"{THREADS_ENV_VAR} should be a positive integer, got {threads!r}"
                )

        return Config(**kwargs)
