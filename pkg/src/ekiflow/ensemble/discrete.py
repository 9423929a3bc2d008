"""Discrete ensemble Kalman iteration

    uʲ ← uʲ − C·Aᵀ(ACAᵀ + τ⁻¹Γ)⁻¹(Auʲ − ỹʲ),

with ỹʲ = y (Σ = 0) or ỹʲ ~ N(y, τ⁻¹Σ) (Σ = Γ).
"""

# stdlib
from typing import Optional
from typing import Union

# third party
import torch

from ekiflow.problem import InverseProblem
from ekiflow.utils import generate_standard_normal
from ekiflow.utils import get_new_generator
from ekiflow.utils import symmetrize

from .ensemble import Ensemble
from .ensemble import EnsembleTrajectory
from .ensemble import _moments
from .sim_config import SigmaMode


def _update(
    U: torch.Tensor,
    prob: InverseProblem,
    tau: float,
    generator: Optional[torch.Generator],
    sigma_scale: float = 1.0,
) -> torch.Tensor:
    _, C = _moments(U)
    AC = prob.A @ C
    innovation = symmetrize(AC @ prob.A.T + prob.Gamma / tau)
    try:
        # gain Kᵀ = (ACAᵀ + Γ/τ)⁻¹·A·C
        gain_T = torch.linalg.solve(innovation, AC)
    except RuntimeError as e:
        raise ValueError(f"Singular innovation covariance: {e}")

    targets = prob.y.expand(U.shape[0], -1)
    if generator is not None:
        draws = generate_standard_normal(generator, (U.shape[0], prob.m))
        targets = targets + (sigma_scale / tau) ** 0.5 * draws @ prob.gamma_chol.T

    return U - (U @ prob.A.T - targets) @ gain_T


def _check_step(tau: float, sigma_mode: SigmaMode, seed: Optional[int]) -> None:
    if not 0 < tau <= 1:
        raise ValueError(f"tau should be in (0, 1], got {tau}")
    if sigma_mode is SigmaMode.STOCHASTIC and seed is None:
        raise ValueError("A stochastic step needs a seed")


def discrete_step(
    ens: Ensemble,
    prob: InverseProblem,
    tau: float,
    sigma_mode: Union[SigmaMode, str] = SigmaMode.DETERMINISTIC,
    seed: Optional[int] = None,
) -> Ensemble:
    """One step of the discrete iteration with step size τ.

    Args:
        ens (Ensemble): Current ensemble.
        prob (InverseProblem): The problem.
        tau (float): Step size in (0, 1].
        sigma_mode (Union[SigmaMode, str]): Perturb the data (stochastic) or not.
        seed (Optional[int]): Seed of the data perturbations.

    Returns:
        Ensemble: Updated ensemble.
    """
    sigma_mode = SigmaMode(sigma_mode)
    _check_step(tau, sigma_mode, seed)
    generator = None
    if sigma_mode is SigmaMode.STOCHASTIC:
        generator = get_new_generator(seed)
    return ens.with_particles(_update(ens.particles, prob, tau, generator))


def iterate_discrete(
    ens: Ensemble,
    prob: InverseProblem,
    tau: float,
    n_steps: int,
    sigma_mode: Union[SigmaMode, str] = SigmaMode.DETERMINISTIC,
    seed: Optional[int] = None,
    record_every: int = 1,
) -> EnsembleTrajectory:
    """n_steps steps of the discrete iteration; step k sits at time k·τ.

    Args:
        ens (Ensemble): Initial ensemble.
        prob (InverseProblem): The problem.
        tau (float): Step size in (0, 1].
        n_steps (int): Number of steps.
        sigma_mode (Union[SigmaMode, str]): Perturb the data (stochastic) or not.
        seed (Optional[int]): Seed of the data perturbations.
        record_every (int): Recording stride.

    Returns:
        EnsembleTrajectory: Recorded ensembles, including step 0.
    """
    sigma_mode = SigmaMode(sigma_mode)
    _check_step(tau, sigma_mode, seed)
    generator = None
    if sigma_mode is SigmaMode.STOCHASTIC:
        generator = get_new_generator(seed)

    U = ens.particles
    times = [0.0]
    records = [U]
    for step in range(1, n_steps + 1):
        U = _update(U, prob, tau, generator)
        if step % record_every == 0 or step == n_steps:
            times.append(step * tau)
            records.append(U)

    return EnsembleTrajectory(
        times=times,
        particles=torch.stack(records),
        rng_seed=ens.rng_seed if seed is None else seed,
        rng_stream=ens.rng_stream,
    )


def variational_equivalence_check(
    ens: Ensemble,
    prob: InverseProblem,
    tau: float,
    means: bool = False,
    rel_tol: float = 1e-12,
) -> float:
    """Compare the deterministic step with argmin (τ/2)‖Au − y‖²_Γ + ½‖u − uʲ‖²_C.

    C may be singular; the minimization runs over uʲ + ran(C), where the
    C-norm is defined. With u = uʲ + Qz and Cᵣ = QᵀCQ the normal equations are
    (τQᵀBQ + Cᵣ⁻¹)z = τQᵀAᵀΓ⁻¹(y − Auʲ).

    Args:
        ens (Ensemble): Current ensemble.
        prob (InverseProblem): The problem.
        tau (float): Step size in (0, 1].
        means (bool): Compare the ensemble means instead of the particles.
        rel_tol (float): Relative eigenvalue cut defining ran(C).

    Returns:
        float: Largest distance between the minimizers and the step results.
    """
    _check_step(tau, SigmaMode.DETERMINISTIC, None)
    updated = _update(ens.particles, prob, tau, generator=None)

    mean, C = _moments(ens.particles)
    starts = mean.unsqueeze(0) if means else ens.particles
    expected = updated.mean(dim=0, keepdim=True) if means else updated

    evals, evecs = torch.linalg.eigh(C)
    keep = evals > rel_tol * max(evals.abs().max().item(), 1e-300)
    Q = evecs[:, keep]
    if Q.shape[1] == 0:
        return torch.linalg.norm(expected - starts, dim=-1).max().item()

    reduced = Q.T @ prob.B @ Q
    normal = tau * reduced + torch.diag(1 / evals[keep])
    rhs = tau * (prob.data_term - starts @ prob.B) @ Q
    z = torch.linalg.solve(normal, rhs.T).T
    minimizers = starts + z @ Q.T

    return torch.linalg.norm(minimizers - expected, dim=-1).max().item()
