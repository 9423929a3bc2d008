"""Closed-form covariance flow Ċ = −𝒜(C), 𝒜(C) = α·C·AᵀΓ⁻¹A·C.

In the eigenbasis S of C₀B the flow is diagonal:
C(t) = S·diag(1/(1 + αtμᵢ))·S⁻¹·C₀.
"""

# stdlib
from typing import Any
from typing import Optional

# third party
import torch

from ekiflow.config import Config
from ekiflow.linalg import SpectralData
from ekiflow.linalg import diagonalize_product
from ekiflow.problem import InverseProblem
from ekiflow.utils import as_tensor
from ekiflow.utils import check_square
from ekiflow.utils import symmetrize

ALPHA_MEAN_FIELD = 1.0
ALPHA_DETERMINISTIC = 2.0


def alpha_averaged(J: int) -> float:
    """Leading-order α of the replicate-averaged stochastic flow, (J+1)/J.

    Args:
        J (int): Ensemble size.

    Returns:
        float: (J+1)/J.

    Raises:
        ValueError: If J < 1.
    """
    if J < 1:
        raise ValueError(f"Ensemble size should be positive, got {J}")
    return (J + 1) / J


class FlowConfig:
    """Initial moments and flow parameter of a covariance/mean flow.

    Attributes:
        alpha (float): Flow parameter α ≥ 1.
        C0 (torch.Tensor): Initial SPD covariance.
        m0 (torch.Tensor): Initial mean.
        spectral (SpectralData): Decomposition of C₀AᵀΓ⁻¹A.
    """

    __slots__ = {"alpha", "C0", "m0", "spectral"}

    def __init__(self, alpha: float, C0: Any, m0: Any, spectral: SpectralData) -> None:
        """Initializer for the FlowConfig.

        Args:
            alpha (float): Flow parameter.
            C0 (Any): Initial covariance.
            m0 (Any): Initial mean.
            spectral (SpectralData): Decomposition of C₀B.

        Raises:
            ValueError: If alpha < 1 or the sizes do not agree.
        """
        if alpha < 1:
            raise ValueError(f"alpha should be at least 1, got {alpha}")

        self.alpha = float(alpha)
        self.C0 = as_tensor(C0)
        self.m0 = as_tensor(m0).reshape(-1)
        self.spectral = spectral

        n = check_square(self.C0, "C0")
        if self.m0.shape[0] != n or spectral.n != n:
            raise ValueError("C0, m0 and the spectral data should have the same size")

    @staticmethod
    def from_problem(
        prob: InverseProblem,
        m0: Any,
        C0: Any,
        alpha: float = ALPHA_DETERMINISTIC,
        config: Optional[Config] = None,
    ) -> "FlowConfig":
        """Build a flow configuration, diagonalizing C₀AᵀΓ⁻¹A.

        Args:
            prob (InverseProblem): The problem.
            m0 (Any): Initial mean.
            C0 (Any): Initial covariance.
            alpha (float): Flow parameter. Defaults to 2 (deterministic EKI).
            config (Optional[Config]): Tolerances.

        Returns:
            FlowConfig: The configuration.
        """
        spectral = diagonalize_product(C0, prob.B, config)
        return FlowConfig(alpha=alpha, C0=C0, m0=m0, spectral=spectral)

    def with_alpha(self, alpha: float) -> "FlowConfig":
        """Same moments and spectral data with another α.

        Args:
            alpha (float): Flow parameter.

        Returns:
            FlowConfig: The configuration.
        """
        return FlowConfig(alpha=alpha, C0=self.C0, m0=self.m0, spectral=self.spectral)

    def __str__(self) -> str:
        """Return the string representation of FlowConfig.

        Returns:
            str: String representation.
        """
        return f"[{type(self).__name__}]: alpha={self.alpha}, n={self.spectral.n}"


class CovOperatorA:
    """The operator 𝒜(C) = α·C·B·C with B = AᵀΓ⁻¹A.

    Attributes:
        alpha (float): Flow parameter.
        B (torch.Tensor): Cached AᵀΓ⁻¹A.
    """

    __slots__ = {"alpha", "B"}

    def __init__(self, alpha: float, B: Any) -> None:
        """Initializer for the CovOperatorA.

        Args:
            alpha (float): Flow parameter.
            B (Any): AᵀΓ⁻¹A.
        """
        self.alpha = float(alpha)
        self.B = as_tensor(B)
        check_square(self.B, "B")

    @staticmethod
    def from_problem(prob: InverseProblem, alpha: float) -> "CovOperatorA":
        """Build the operator for a problem.

        Args:
            prob (InverseProblem): The problem.
            alpha (float): Flow parameter.

        Returns:
            CovOperatorA: The operator.
        """
        return CovOperatorA(alpha=alpha, B=prob.B)

    def __call__(self, C: torch.Tensor) -> torch.Tensor:
        """Apply the operator, see apply_operator_A.

        Args:
            C (torch.Tensor): Square matrix.

        Returns:
            torch.Tensor: α·C·B·C.
        """
        return apply_operator_A(self, C)


def apply_operator_A(op: CovOperatorA, C: Any) -> torch.Tensor:
    """Evaluate 𝒜(C) = α·C·B·C.

    Args:
        op (CovOperatorA): The operator.
        C (Any): Square matrix of the size of B.

    Returns:
        torch.Tensor: α·C·B·C.

    Raises:
        ValueError: If C does not match B.
    """
    C = as_tensor(C)
    n = op.B.shape[0]
    if C.dim() != 2 or C.shape != (n, n):
        raise ValueError(f"C should be {n}x{n}, got {tuple(C.shape)}")
    return op.alpha * C @ op.B @ C


def _check_time(t: float) -> None:
    if t < 0:
        raise ValueError(f"t should be non negative, got {t}")


def covariance_at(cfg: FlowConfig, t: float) -> torch.Tensor:
    """Closed-form covariance C(t) = S·E(t)·S⁻¹·C₀, E(t) = diag(1/(1 + αtμᵢ)).

    Args:
        cfg (FlowConfig): Flow configuration.
        t (float): Nonnegative time.

    Returns:
        torch.Tensor: Symmetric PSD n×n matrix.

    Raises:
        ValueError: If t is negative.
    """
    _check_time(t)
    decay = 1 / (1 + cfg.alpha * t * cfg.spectral.mu)
    return symmetrize(cfg.spectral.assemble(decay) @ cfg.C0)


def covariance_path(cfg: FlowConfig, times: Any) -> torch.Tensor:
    """Closed-form covariance on a grid of times.

    Args:
        cfg (FlowConfig): Flow configuration.
        times (Any): K nonnegative times.

    Returns:
        torch.Tensor: K×n×n tensor.

    Raises:
        ValueError: If a time is negative.
    """
    times = as_tensor(times).reshape(-1)
    if times.numel() and times.min() < 0:
        raise ValueError("times should be non negative")
    decay = 1 / (1 + cfg.alpha * times.unsqueeze(-1) * cfg.spectral.mu)
    return symmetrize(cfg.spectral.assemble(decay) @ cfg.C0)


def covariance_resolvent_form(C0: Any, B: Any, alpha: float, t: float) -> torch.Tensor:
    """Resolvent form C(t) = C₀(E + αtBC₀)⁻¹ by a dense solve.

    C₀ only needs to be symmetric PSD, so singular starts (Ĉ) are accepted.

    Args:
        C0 (Any): Initial covariance.
        B (Any): AᵀΓ⁻¹A.
        alpha (float): Flow parameter.
        t (float): Nonnegative time.

    Returns:
        torch.Tensor: n×n matrix.
    """
    _check_time(t)
    C0 = as_tensor(C0)
    B = as_tensor(B)
    eye = torch.eye(C0.shape[0], dtype=C0.dtype)
    # C0 (E + αtBC0)⁻¹ = ((E + αtC0B)⁻¹ C0)ᵀ
    return symmetrize(torch.linalg.solve(eye + alpha * t * C0 @ B, C0).T)


def covariance_limit(cfg: FlowConfig) -> torch.Tensor:
    """Limit C∞ = S·E∞·S⁻¹·C₀ with E∞ zero on the nonzero spectrum.

    Args:
        cfg (FlowConfig): Flow configuration.

    Returns:
        torch.Tensor: Symmetric PSD n×n matrix with A·C∞ = 0.
    """
    e_inf = torch.ones_like(cfg.spectral.mu)
    e_inf[: cfg.spectral.rank_k] = 0
    return symmetrize(cfg.spectral.assemble(e_inf) @ cfg.C0)


def asymptotic_profile(cfg: FlowConfig) -> torch.Tensor:
    """Profile Ĉ = lim t·(C(t) − C∞) = S·diag(1/(αμᵢ), 0)·S⁻¹·C₀.

    Ĉ is a fixed point of 𝒜: 𝒜(Ĉ) = Ĉ.

    Args:
        cfg (FlowConfig): Flow configuration.

    Returns:
        torch.Tensor: Symmetric PSD n×n matrix.
    """
    return symmetrize(cfg.spectral.assemble(cfg.spectral.mu_plus / cfg.alpha) @ cfg.C0)


def self_similar_evolution(
    C_hat: Any, lam: float, op: CovOperatorA, t: float, tol: float = 1e-8
) -> torch.Tensor:
    """Self-similar solution C(t) = Ĉ/(1 + λt) of Ċ = −𝒜(C).

    λ is the eigenvalue of the full operator, 𝒜(Ĉ) = λ·Ĉ (𝒜 includes α).

    Args:
        C_hat (Any): Eigenmatrix of 𝒜.
        lam (float): Its eigenvalue.
        op (CovOperatorA): The operator.
        t (float): Nonnegative time.
        tol (float): Relative tolerance on the eigen-equation residual.

    Returns:
        torch.Tensor: Ĉ/(1 + λt).

    Raises:
        ValueError: If 𝒜(Ĉ) ≠ λĈ within tolerance.
    """
    _check_time(t)
    C_hat = as_tensor(C_hat)
    residual = torch.linalg.norm(apply_operator_A(op, C_hat) - lam * C_hat).item()
    scale = torch.linalg.norm(C_hat).item()
    if residual > tol * max(scale, 1e-300):
        raise ValueError(
            f"C_hat is not an eigenmatrix of the operator for lambda={lam} "
            f"(residual {residual:.3e})"
        )
    return C_hat / (1 + lam * t)
