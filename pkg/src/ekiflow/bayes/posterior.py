"""Exact Gaussian posterior of the linear model."""

# stdlib
from typing import Any
from typing import Optional
from typing import Tuple

# third party
import torch

from ekiflow.config import Config
from ekiflow.flow import FlowConfig
from ekiflow.flow import covariance_at
from ekiflow.flow import covariance_path
from ekiflow.flow import mean_at
from ekiflow.flow import mean_path
from ekiflow.problem import InverseProblem
from ekiflow.utils import as_tensor
from ekiflow.utils import check_square
from ekiflow.utils import symmetrize


class GaussianMeasure:
    """Gaussian measure N(mean, cov).

    Attributes:
        mean (torch.Tensor): Mean vector.
        cov (torch.Tensor): SPD covariance.
    """

    __slots__ = {"mean", "cov"}

    def __init__(self, mean: Any, cov: Any, config: Optional[Config] = None) -> None:
        """Initializer for the GaussianMeasure.

        Args:
            mean (Any): Mean vector.
            cov (Any): Covariance.
            config (Optional[Config]): Tolerances.

        Raises:
            ValueError: If cov is not SPD or does not match the mean.
        """
        config = config or Config()
        self.mean = as_tensor(mean).reshape(-1)
        self.cov = as_tensor(cov)

        if check_square(self.cov, "cov") != self.mean.shape[0]:
            raise ValueError("mean and cov should have matching sizes")

        asym = torch.linalg.norm(self.cov - self.cov.T).item()
        if asym > config.tol_sym * torch.linalg.norm(self.cov).item():
            raise ValueError("cov should be symmetric")
        if torch.linalg.eigvalsh(symmetrize(self.cov))[0] <= 0:
            raise ValueError("cov should be positive definite")

    def __str__(self) -> str:
        """Return the string representation of GaussianMeasure.

        Returns:
            str: String representation.
        """
        return f"[{type(self).__name__}]: n={self.mean.shape[0]}"


def exact_posterior(prior: GaussianMeasure, prob: InverseProblem) -> GaussianMeasure:
    """Posterior in resolvent form.

    cov = C₀(E + BC₀)⁻¹, mean = cov·C₀⁻¹m₀ + cov·AᵀΓ⁻¹y with B = AᵀΓ⁻¹A.

    Args:
        prior (GaussianMeasure): Prior N(m₀, C₀).
        prob (InverseProblem): The problem.

    Returns:
        GaussianMeasure: The posterior.
    """
    C0 = prior.cov
    eye = torch.eye(C0.shape[0], dtype=C0.dtype)
    # (E + C0B)⁻¹C0 is the transpose of C0(E + BC0)⁻¹
    cov = symmetrize(torch.linalg.solve(eye + C0 @ prob.B, C0))
    # cov·C0⁻¹ = (E + C0B)⁻¹
    mean = torch.linalg.solve(eye + C0 @ prob.B, prior.mean) + cov @ prob.data_term
    return GaussianMeasure(mean=mean, cov=cov)


def exact_posterior_information_form(
    prior: GaussianMeasure, prob: InverseProblem
) -> GaussianMeasure:
    """Posterior in information form.

    cov = (C₀⁻¹ + AᵀΓ⁻¹A)⁻¹, mean = cov·(C₀⁻¹m₀ + AᵀΓ⁻¹y).

    Args:
        prior (GaussianMeasure): Prior N(m₀, C₀).
        prob (InverseProblem): The problem.

    Returns:
        GaussianMeasure: The posterior.
    """
    prior_precision = torch.cholesky_inverse(torch.linalg.cholesky(prior.cov))
    precision = symmetrize(prior_precision + prob.B)
    chol = torch.linalg.cholesky(precision)
    cov = symmetrize(torch.cholesky_inverse(chol))
    shift = prior_precision @ prior.mean + prob.data_term
    mean = torch.cholesky_solve(shift.unsqueeze(-1), chol).squeeze(-1)
    return GaussianMeasure(mean=mean, cov=cov)


def posterior_gap(
    cfg: FlowConfig, prob: InverseProblem, t: float
) -> Tuple[float, float]:
    """Distance of the flow moments at t to the posterior of N(cfg.m0, cfg.C0).

    Args:
        cfg (FlowConfig): Flow configuration.
        prob (InverseProblem): The problem.
        t (float): Nonnegative time.

    Returns:
        Tuple[float, float]: (‖m(t) − μ_post‖, ‖C(t) − Σ_post‖_F).
    """
    posterior = exact_posterior(GaussianMeasure(cfg.m0, cfg.C0), prob)
    mean_gap = torch.linalg.norm(mean_at(cfg, prob, cfg.m0, t) - posterior.mean)
    cov_gap = torch.linalg.norm(covariance_at(cfg, t) - posterior.cov)
    return mean_gap.item(), cov_gap.item()


def posterior_non_recovery(cfg: FlowConfig, prob: InverseProblem, times: Any) -> float:
    """Smallest joint relative distance to the posterior over a time grid.

    At each time the distance is the larger of the relative mean gap and the
    relative covariance gap, so it vanishes only where both moments match.

    Args:
        cfg (FlowConfig): Flow configuration.
        prob (InverseProblem): The problem.
        times (Any): Grid of nonnegative times.

    Returns:
        float: min over t of max(mean gap, covariance gap), both relative.
    """
    posterior = exact_posterior(GaussianMeasure(cfg.m0, cfg.C0), prob)
    times = as_tensor(times).reshape(-1)

    mean_scale = torch.linalg.norm(posterior.mean).item() or 1.0
    cov_scale = torch.linalg.norm(posterior.cov).item()

    means = mean_path(cfg, prob, cfg.m0, times)
    covs = covariance_path(cfg, times)
    mean_gaps = torch.linalg.norm(means - posterior.mean, dim=-1) / mean_scale
    cov_gaps = torch.linalg.matrix_norm(covs - posterior.cov) / cov_scale
    return torch.maximum(mean_gaps, cov_gaps).min().item()
