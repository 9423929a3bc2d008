"""Particle ensembles, their empirical moments and recorded trajectories."""

# stdlib
from typing import Any
from typing import Tuple

# third party
import torch

from ekiflow.utils import as_tensor
from ekiflow.utils import check_square
from ekiflow.utils import generate_standard_normal
from ekiflow.utils import get_new_generator
from ekiflow.utils import symmetrize


def _moments(particles: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Mean and covariance (divisor J) over dimension −2, batches allowed."""
    mean = particles.mean(dim=-2)
    centered = particles - mean.unsqueeze(-2)
    cov = centered.transpose(-1, -2) @ centered / particles.shape[-2]
    return mean, symmetrize(cov)


class Ensemble:
    """J particles uʲ in ℝⁿ.

    Attributes:
        particles (torch.Tensor): J×n tensor, row j is uʲ.
        rng_seed (int): Seed the ensemble was drawn or driven with.
        rng_stream (int): Index of the replicate stream the ensemble belongs to.
    """

    __slots__ = {"particles", "rng_seed", "rng_stream"}

    def __init__(self, particles: Any, rng_seed: int = 0, rng_stream: int = 0) -> None:
        """Initializer for the Ensemble.

        Args:
            particles (Any): J×n particles.
            rng_seed (int): Seed. Defaults to 0.
            rng_stream (int): Replicate stream index. Defaults to 0.

        Raises:
            ValueError: If particles is not a matrix with at least 2 rows.
        """
        self.particles = as_tensor(particles)
        if self.particles.dim() != 2 or self.particles.shape[0] < 2:
            raise ValueError(
                f"An ensemble needs a J×n matrix with J >= 2, "
                f"got shape {tuple(self.particles.shape)}"
            )
        self.rng_seed = rng_seed
        self.rng_stream = rng_stream

    @property
    def J(self) -> int:
        """Ensemble size.

        Returns:
            int: J.
        """
        return self.particles.shape[0]

    @property
    def n(self) -> int:
        """Parameter dimension.

        Returns:
            int: n.
        """
        return self.particles.shape[1]

    def with_particles(self, particles: torch.Tensor) -> "Ensemble":
        """Same seed and stream, new particles.

        Args:
            particles (torch.Tensor): J×n particles.

        Returns:
            Ensemble: The new ensemble.
        """
        return Ensemble(particles, rng_seed=self.rng_seed, rng_stream=self.rng_stream)

    def __str__(self) -> str:
        """Return the string representation of Ensemble.

        Returns:
            str: String representation.
        """
        return f"[{type(self).__name__}]: J={self.J}, n={self.n}, seed={self.rng_seed}"


class EnsembleTrajectory:
    """Ensembles recorded at increasing times.

    Attributes:
        times (torch.Tensor): K recording times.
        particles (torch.Tensor): K×J×n tensor.
        rng_seed (int): Seed of the run.
        rng_stream (int): Replicate stream index.
    """

    __slots__ = {"times", "particles", "rng_seed", "rng_stream"}

    def __init__(
        self,
        times: Any,
        particles: Any,
        rng_seed: int = 0,
        rng_stream: int = 0,
    ) -> None:
        """Initializer for the EnsembleTrajectory.

        Args:
            times (Any): K recording times.
            particles (Any): K×J×n particles.
            rng_seed (int): Seed of the run.
            rng_stream (int): Replicate stream index.

        Raises:
            ValueError: If times and particles do not match.
        """
        self.times = as_tensor(times).reshape(-1)
        self.particles = as_tensor(particles)
        if self.particles.dim() != 3 or self.particles.shape[0] != self.times.shape[0]:
            raise ValueError("particles should be K×J×n with one slice per time")
        self.rng_seed = rng_seed
        self.rng_stream = rng_stream

    def __len__(self) -> int:
        """Number of recorded times.

        Returns:
            int: K.
        """
        return self.times.shape[0]

    def ensemble_at(self, index: int) -> Ensemble:
        """Ensemble recorded at position index.

        Args:
            index (int): Position in the record.

        Returns:
            Ensemble: The ensemble.
        """
        return Ensemble(
            self.particles[index], rng_seed=self.rng_seed, rng_stream=self.rng_stream
        )

    @property
    def final(self) -> Ensemble:
        """Last recorded ensemble.

        Returns:
            Ensemble: The ensemble at the final time.
        """
        return self.ensemble_at(-1)

    def moments(self) -> Tuple[torch.Tensor, torch.Tensor]:
        """Empirical mean and covariance at every recorded time.

        Returns:
            Tuple[torch.Tensor, torch.Tensor]: K×n means and K×n×n covariances.
        """
        return _moments(self.particles)


def empirical_moments(ens: Ensemble) -> Tuple[torch.Tensor, torch.Tensor]:
    """Empirical mean and covariance, both with divisor J.

    Args:
        ens (Ensemble): The ensemble.

    Returns:
        Tuple[torch.Tensor, torch.Tensor]: m = (1/J)Σuʲ and
        C = (1/J)Σ(uʲ − m)(uʲ − m)ᵀ.
    """
    return _moments(ens.particles)


def init_from_prior(
    m0: Any, C0: Any, J: int, seed: int, moment_matched: bool = False
) -> Ensemble:
    """Draw J particles from N(m0, C0).

    With moment_matched the centered draws are mapped affinely so that the
    empirical moments equal (m0, C0) exactly.

    Args:
        m0 (Any): Prior mean.
        C0 (Any): SPD prior covariance.
        J (int): Ensemble size.
        seed (int): Seed.
        moment_matched (bool): Correct the draws to the exact moments.

    Returns:
        Ensemble: The ensemble.

    Raises:
        ValueError: If C0 is not SPD, J < 2, or moment matching is requested
            with J ≤ n.
    """
    m0 = as_tensor(m0).reshape(-1)
    C0 = as_tensor(C0)
    n = check_square(C0, "C0")
    if J < 2:
        raise ValueError(f"Ensemble size should be at least 2, got {J}")
    if moment_matched and J <= n:
        raise ValueError(f"Moment matching needs J > n, got J={J}, n={n}")

    chol, info = torch.linalg.cholesky_ex(C0)
    if info.item() != 0:
        raise ValueError("C0 should be symmetric positive definite")

    generator = get_new_generator(seed)
    draws = generate_standard_normal(generator, (J, n))

    if moment_matched:
        centered = draws - draws.mean(dim=0)
        sample_chol = torch.linalg.cholesky(centered.T @ centered / J)
        # whiten so the empirical covariance is exactly the identity
        draws = torch.linalg.solve_triangular(
            sample_chol.T, centered, upper=True, left=False
        )

    return Ensemble(m0 + draws @ chol.T, rng_seed=seed)
