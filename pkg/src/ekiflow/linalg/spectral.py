"""Spectral calculus for the preconditioned data precision C₀AᵀΓ⁻¹A.

C₀B is similar to the symmetric matrix C₀^{1/2}·B·C₀^{1/2}, so it is
diagonalizable with a real, nonnegative spectrum: C₀B = S·diag(μ)·S⁻¹.
Every closed-form quantity of the flow is a function of μ in this basis.
"""

# stdlib
from typing import Any
from typing import Optional
from typing import Tuple

# third party
import torch

from ekiflow.config import Config
from ekiflow.utils import as_tensor
from ekiflow.utils import check_square
from ekiflow.utils import symmetrize


def _check_symmetric(M: torch.Tensor, name: str, config: Config) -> None:
    scale = torch.linalg.norm(M)
    if torch.linalg.norm(M - M.T) > config.tol_sym * max(scale.item(), 1e-300):
        raise ValueError(f"{name} should be symmetric")


def _spd_eigh(
    M: Any, name: str, config: Optional[Config] = None
) -> Tuple[torch.Tensor, torch.Tensor]:
    config = config or Config()
    M = as_tensor(M)
    check_square(M, name)
    _check_symmetric(M, name, config)

    evals, evecs = torch.linalg.eigh(symmetrize(M))
    if evals[0] <= 0:
        raise ValueError(f"{name} should be positive definite")

    return evals, evecs


def spd_sqrt(M: Any, config: Optional[Config] = None) -> torch.Tensor:
    """Symmetric square root R of an SPD matrix, R·R = M.

    Args:
        M (Any): SPD matrix.
        config (Optional[Config]): Tolerances. Defaults to Config().

    Returns:
        torch.Tensor: The SPD square root.
    """
    evals, evecs = _spd_eigh(M, "M", config)
    return symmetrize((evecs * evals.sqrt()) @ evecs.T)


class SpectralData:
    """Eigendecomposition C₀B = S·diag(μ)·S⁻¹.

    Attributes:
        S (torch.Tensor): Eigenvectors of C₀B as columns, unit Euclidean norm,
            first nonzero component positive.
        S_inv (torch.Tensor): Inverse of S.
        mu (torch.Tensor): Eigenvalues sorted descending, exactly zero from rank_k on.
        rank_k (int): Number of nonzero eigenvalues.
        C0_sqrt (torch.Tensor): Symmetric square root of C₀.
    """

    __slots__ = {"S", "S_inv", "mu", "rank_k", "C0_sqrt"}

    def __init__(
        self,
        S: torch.Tensor,
        S_inv: torch.Tensor,
        mu: torch.Tensor,
        rank_k: int,
        C0_sqrt: torch.Tensor,
    ) -> None:
        """Initializer for the SpectralData.

        Args:
            S (torch.Tensor): Eigenvector matrix.
            S_inv (torch.Tensor): Its inverse.
            mu (torch.Tensor): Eigenvalues.
            rank_k (int): Numerical rank.
            C0_sqrt (torch.Tensor): Square root of C₀.
        """
        self.S = S
        self.S_inv = S_inv
        self.mu = mu
        self.rank_k = rank_k
        self.C0_sqrt = C0_sqrt

    @property
    def n(self) -> int:
        """Dimension of the parameter space.

        Returns:
            int: n.
        """
        return self.mu.shape[0]

    @property
    def mu_plus(self) -> torch.Tensor:
        """Pseudo-inverse of the spectrum: 1/μᵢ for i < rank_k, 0 otherwise.

        Returns:
            torch.Tensor: Vector of length n.
        """
        mu_plus = torch.zeros_like(self.mu)
        mu_plus[: self.rank_k] = 1 / self.mu[: self.rank_k]
        return mu_plus

    def assemble(self, diagonal: torch.Tensor) -> torch.Tensor:
        """Matrix S·diag(d)·S⁻¹ for a vector d, or a batch of them.

        Args:
            diagonal (torch.Tensor): Vector of length n or K×n batch.

        Returns:
            torch.Tensor: n×n matrix or K×n×n batch.
        """
        return (self.S * diagonal.unsqueeze(-2)) @ self.S_inv

    def __str__(self) -> str:
        """Return the string representation of SpectralData.

        Returns:
            str: String representation.
        """
        return f"[{type(self).__name__}]: n={self.n}, rank_k={self.rank_k}"


def diagonalize_product(
    C0: Any, B: Any, config: Optional[Config] = None
) -> SpectralData:
    """Diagonalize C₀B through the symmetric similarity C₀^{1/2}·B·C₀^{1/2}.

    If C₀^{1/2}·B·C₀^{1/2} = Q·diag(μ)·Qᵀ then C₀B·(C₀^{1/2}Q) = (C₀^{1/2}Q)·diag(μ),
    so S is C₀^{1/2}Q with normalized columns.

    Args:
        C0 (Any): SPD matrix n×n.
        B (Any): Symmetric PSD matrix n×n.
        config (Optional[Config]): Tolerances. Defaults to Config().

    Returns:
        SpectralData: The decomposition.

    Raises:
        ValueError: If C0 is not SPD, B is not symmetric or has a negative
            eigenvalue beyond tolerance, or the shapes do not match.
    """
    config = config or Config()
    C0 = as_tensor(C0)
    B = as_tensor(B)

    n = check_square(C0, "C0")
    if check_square(B, "B") != n:
        raise ValueError(f"B should be {n}x{n}, got {tuple(B.shape)}")
    _check_symmetric(B, "B", config)

    c_evals, c_evecs = _spd_eigh(C0, "C0", config)
    C0_sqrt = symmetrize((c_evecs * c_evals.sqrt()) @ c_evecs.T)
    C0_inv_sqrt = symmetrize((c_evecs / c_evals.sqrt()) @ c_evecs.T)

    evals, Q = torch.linalg.eigh(symmetrize(C0_sqrt @ B @ C0_sqrt))
    evals = evals.flip(0)
    Q = Q.flip(1)

    scale = evals.abs().max().item()
    if evals[-1] < -config.tol_eig * max(scale, 1e-300):
        raise ValueError("B should be positive semi-definite")

    mu = evals.clamp(min=0)
    mu1 = mu[0].item()
    rank_k = int((mu > config.tol_rank * mu1).sum()) if mu1 > 0 else 0
    mu[rank_k:] = 0

    S = C0_sqrt @ Q
    largest = S.abs().max(dim=0).values
    significant = S.abs() > 1e-12 * largest
    first = significant.to(torch.int64).argmax(dim=0)
    signs = torch.sign(S[first, torch.arange(n)])
    col_scale = signs / torch.linalg.norm(S, dim=0)

    S = S * col_scale
    S_inv = (Q.T @ C0_inv_sqrt) / col_scale.unsqueeze(-1)

    return SpectralData(S=S, S_inv=S_inv, mu=mu, rank_k=rank_k, C0_sqrt=C0_sqrt)


def resolvent(spectral: SpectralData, t: float) -> torch.Tensor:
    """Resolvent (E + t·C₀B)⁻¹ = S·diag(1/(1 + tμᵢ))·S⁻¹.

    Args:
        spectral (SpectralData): Decomposition of C₀B.
        t (float): Nonnegative scalar.

    Returns:
        torch.Tensor: n×n matrix.

    Raises:
        ValueError: If t is negative.
    """
    if t < 0:
        raise ValueError(f"t should be non negative, got {t}")
    return spectral.assemble(1 / (1 + t * spectral.mu))


def precond_cov_power(
    spectral: SpectralData, t: float, alpha: float, p: float
) -> torch.Tensor:
    """Fractional power (C(t)C₀⁻¹)^p = S·diag((1 + αtμᵢ)^{−p})·S⁻¹.

    Args:
        spectral (SpectralData): Decomposition of C₀B.
        t (float): Nonnegative time.
        alpha (float): Flow parameter α ≥ 1.
        p (float): Real exponent.

    Returns:
        torch.Tensor: n×n matrix.

    Raises:
        ValueError: If t is negative or alpha < 1.
    """
    if t < 0:
        raise ValueError(f"t should be non negative, got {t}")
    if alpha < 1:
        raise ValueError(f"alpha should be at least 1, got {alpha}")
    return spectral.assemble((1 + alpha * t * spectral.mu) ** (-p))


def pseudo_inverse_gamma(spectral: SpectralData, C0: Any) -> torch.Tensor:
    """Generalized inverse (AᵀΓ⁻¹A)⁻ := S·D⁺·S⁻¹·C₀.

    It satisfies M⁻MM⁻ = M⁻ and MM⁻M = M for M = AᵀΓ⁻¹A, but M⁻M is an
    oblique projector, so in general it is not the Moore-Penrose inverse.

    Args:
        spectral (SpectralData): Decomposition of C₀B.
        C0 (Any): The C₀ used for spectral.

    Returns:
        torch.Tensor: n×n matrix.
    """
    return spectral.assemble(spectral.mu_plus) @ as_tensor(C0)
