"""Ensemble and residual spreads, in parameter and in observation space.

With deviations eʲ = uʲ − m and residuals rʲ = uʲ − u†:

    V_e = (1/2J)Σ‖eʲ‖²,        V_r = (1/2J)Σ‖rʲ‖²,
    𝔙_e = (1/2J)Σ‖Aeʲ‖²_Γ,     𝔙_r = (1/2J)Σ‖Arʲ‖²_Γ.
"""

# stdlib
from typing import Any
from typing import List
from typing import Optional

# third party
import torch

from ekiflow.ensemble import Ensemble
from ekiflow.ensemble import EnsembleTrajectory
from ekiflow.ensemble import empirical_moments
from ekiflow.flow import FlowConfig
from ekiflow.flow import minimal_norm_solution
from ekiflow.linalg import SpectralData
from ekiflow.linalg import gamma_preimage
from ekiflow.linalg import gamma_projection
from ekiflow.problem import InverseProblem
from ekiflow.utils import as_tensor


class SpreadRecord:
    """Spreads of one ensemble with respect to a reference u†.

    Attributes:
        t (float): Time of the ensemble.
        V_e (float): Ensemble spread.
        V_r (float): Residual spread.
        fV_e (float): Ensemble spread in observation space.
        fV_r (float): Residual spread in observation space.
        mean_residual_norm (float): ‖m − u†‖.
        mean_fwd_residual (float): ½‖A(m − u†)‖²_Γ.
        lyapunov (Optional[float]): ½‖S⁻¹(m − ξ)‖² when the spectral data is known.
    """

    __slots__ = {
        "t",
        "V_e",
        "V_r",
        "fV_e",
        "fV_r",
        "mean_residual_norm",
        "mean_fwd_residual",
        "lyapunov",
    }

    def __init__(
        self,
        t: float,
        V_e: float,
        V_r: float,
        fV_e: float,
        fV_r: float,
        mean_residual_norm: float,
        mean_fwd_residual: float,
        lyapunov: Optional[float] = None,
    ) -> None:
        """Initializer for the SpreadRecord.

        Args:
            t (float): Time.
            V_e (float): Ensemble spread.
            V_r (float): Residual spread.
            fV_e (float): Observation-space ensemble spread.
            fV_r (float): Observation-space residual spread.
            mean_residual_norm (float): ‖m − u†‖.
            mean_fwd_residual (float): ½‖A(m − u†)‖²_Γ.
            lyapunov (Optional[float]): Lyapunov value.
        """
        self.t = t
        self.V_e = V_e
        self.V_r = V_r
        self.fV_e = fV_e
        self.fV_r = fV_r
        self.mean_residual_norm = mean_residual_norm
        self.mean_fwd_residual = mean_fwd_residual
        self.lyapunov = lyapunov

    def __str__(self) -> str:
        """Return the string representation of SpreadRecord.

        Returns:
            str: String representation.
        """
        return (
            f"[{type(self).__name__}]: t={self.t}, V_e={self.V_e}, V_r={self.V_r}, "
            f"fV_e={self.fV_e}, fV_r={self.fV_r}"
        )


def lyapunov_value(m: Any, xi: Any, S: Any) -> Any:
    """Problem-adapted Lyapunov function L(m) = ½‖S⁻¹(m − ξ)‖².

    Args:
        m (Any): Point of length n, or K×n batch of points.
        xi (Any): Preimage of the clean data.
        S (Any): Eigenvector matrix of C₀AᵀΓ⁻¹A.

    Returns:
        Any: float for a single point, tensor of length K for a batch.
    """
    m = as_tensor(m)
    diff = m - as_tensor(xi).reshape(-1)
    coords = torch.linalg.solve(as_tensor(S), diff.transpose(-1, 0)).transpose(-1, 0)
    values = 0.5 * (coords ** 2).sum(dim=-1)
    if m.dim() == 1:
        return values.item()
    return values


def compute_spreads(
    ens: Ensemble,
    prob: InverseProblem,
    u_ref: Any,
    t: float = 0.0,
    spectral: Optional[SpectralData] = None,
    xi: Optional[Any] = None,
) -> SpreadRecord:
    """All spreads of an ensemble with respect to u_ref.

    Args:
        ens (Ensemble): The ensemble.
        prob (InverseProblem): The problem.
        u_ref (Any): Reference parameter u†.
        t (float): Time stamp of the record.
        spectral (Optional[SpectralData]): Spectral data for the Lyapunov value.
        xi (Optional[Any]): Data preimage, defaults to the Γ-least-squares one.

    Returns:
        SpreadRecord: The record.
    """
    u_ref = as_tensor(u_ref).reshape(-1)
    m, _ = empirical_moments(ens)
    deviations = ens.particles - m
    residuals = ens.particles - u_ref

    def spread(rows: torch.Tensor) -> float:
        return 0.5 * (rows ** 2).sum(dim=-1).mean().item()

    def fwd_spread(rows: torch.Tensor) -> float:
        return spread(prob.whiten(prob.A @ rows.T).T)

    mean_residual = m - u_ref
    mean_fwd = 0.5 * prob.misfit_norm(prob.A @ mean_residual).item() ** 2

    lyapunov = None
    if spectral is not None:
        if xi is None:
            xi = gamma_preimage(prob.y, prob.A, prob.Gamma)
        lyapunov = lyapunov_value(m, xi, spectral.S)

    return SpreadRecord(
        t=float(t),
        V_e=spread(deviations),
        V_r=spread(residuals),
        fV_e=fwd_spread(deviations),
        fV_r=fwd_spread(residuals),
        mean_residual_norm=torch.linalg.norm(mean_residual).item(),
        mean_fwd_residual=mean_fwd,
        lyapunov=lyapunov,
    )


def spreads_along(
    trajectory: EnsembleTrajectory,
    prob: InverseProblem,
    u_ref: Any,
    spectral: Optional[SpectralData] = None,
    xi: Optional[Any] = None,
) -> List[SpreadRecord]:
    """Spread records at every recorded time of a trajectory.

    Args:
        trajectory (EnsembleTrajectory): The run.
        prob (InverseProblem): The problem.
        u_ref (Any): Reference parameter u†.
        spectral (Optional[SpectralData]): Spectral data for the Lyapunov value.
        xi (Optional[Any]): Data preimage.

    Returns:
        List[SpreadRecord]: One record per time.
    """
    if spectral is not None and xi is None:
        xi = gamma_preimage(prob.y, prob.A, prob.Gamma)
    return [
        compute_spreads(
            trajectory.ensemble_at(k),
            prob,
            u_ref,
            trajectory.times[k].item(),
            spectral,
            xi,
        )
        for k in range(len(trajectory))
    ]


def canonical_reference(
    cfg: FlowConfig, prob: InverseProblem, ens0: Ensemble
) -> torch.Tensor:
    """The reference m† the ensemble mean converges to for clean data.

    m† = argmin{‖m − m(0)‖_{C₀} : Am = Au†}; without a ground truth the
    constraint uses the Γ-projection of y. With u† = m† the residual spread
    and the ensemble spread share their limit.

    Args:
        cfg (FlowConfig): Flow configuration, C₀ the initial ensemble covariance.
        prob (InverseProblem): The problem.
        ens0 (Ensemble): Initial ensemble.

    Returns:
        torch.Tensor: m†.
    """
    m0, _ = empirical_moments(ens0)
    if prob.u_truth is not None:
        target = prob.A @ prob.u_truth
    else:
        target = gamma_projection(prob.y, prob.A, prob.Gamma)
    return minimal_norm_solution(cfg.C0, m0, prob.A, prob.Gamma, target)


def fwd_spread_bound(fVe0: float, J: int, t: float) -> float:
    """Comparison bound 𝔙_e(t) ≤ 1/((4/J)t + 1/𝔙_e(0)).

    Args:
        fVe0 (float): Initial observation-space ensemble spread.
        J (int): Ensemble size.
        t (float): Time.

    Returns:
        float: The bound.

    Raises:
        ValueError: If fVe0 is not positive.
    """
    if fVe0 <= 0:
        raise ValueError(f"The initial spread should be positive, got {fVe0}")
    return 1 / (4 / J * t + 1 / fVe0)
