"""Linear inverse problem y = A u† + ε with Gaussian noise model N(0, Γ)."""

# stdlib
from typing import Any
from typing import Optional

# third party
import torch

from ekiflow.config import Config
from ekiflow.utils import as_tensor
from ekiflow.utils import check_square


class InverseProblem:
    """A linear inverse problem.

    Attributes:
        A (torch.Tensor): Forward operator, m×n.
        Gamma (torch.Tensor): Noise covariance, SPD m×m.
        y (torch.Tensor): Datum, m.
        u_truth (Optional[torch.Tensor]): Ground truth u†, n.
        eps (Optional[torch.Tensor]): Noise realization ε, m.
    """

    __slots__ = {"A", "Gamma", "y", "u_truth", "eps", "_gamma_chol"}

    def __init__(
        self,
        A: Any,
        Gamma: Any,
        y: Any,
        u_truth: Optional[Any] = None,
        eps: Optional[Any] = None,
        config: Optional[Config] = None,
    ) -> None:
        """Initializer for the InverseProblem.

        Args:
            A (Any): Forward operator m×n.
            Gamma (Any): Noise covariance m×m.
            y (Any): Datum of length m.
            u_truth (Optional[Any]): Ground truth of length n.
            eps (Optional[Any]): Noise of length m.
            config (Optional[Config]): Tolerances. Defaults to Config().

        Raises:
            ValueError: If shapes are inconsistent, Gamma is not SPD or
                y differs from A·u_truth + eps.
        """
        config = config or Config()

        self.A = as_tensor(A)
        if self.A.dim() != 2:
            raise ValueError(f"A should be a matrix, got shape {tuple(self.A.shape)}")
        m, n = self.A.shape

        self.Gamma = as_tensor(Gamma)
        if check_square(self.Gamma, "Gamma") != m:
            raise ValueError(f"Gamma should be {m}x{m}, got {tuple(self.Gamma.shape)}")

        self.y = as_tensor(y).reshape(-1)
        if self.y.shape[0] != m:
            raise ValueError(f"y should have length {m}, got {self.y.shape[0]}")

        self.u_truth = None if u_truth is None else as_tensor(u_truth).reshape(-1)
        if self.u_truth is not None and self.u_truth.shape[0] != n:
            raise ValueError(
                f"u_truth should have length {n}, got {self.u_truth.shape[0]}"
            )

        self.eps = None if eps is None else as_tensor(eps).reshape(-1)
        if self.eps is not None and self.eps.shape[0] != m:
            raise ValueError(f"eps should have length {m}, got {self.eps.shape[0]}")

        asym = torch.linalg.norm(self.Gamma - self.Gamma.T)
        if asym > config.tol_sym * torch.linalg.norm(self.Gamma):
            raise ValueError("Gamma should be symmetric")

        chol, info = torch.linalg.cholesky_ex(self.Gamma)
        if info.item() != 0:
            raise ValueError("Gamma should be positive definite")
        self._gamma_chol = chol

        if self.u_truth is not None and self.eps is not None:
            mismatch = torch.linalg.norm(self.y - self.A @ self.u_truth - self.eps)
            if mismatch > 1e-10 * (1 + torch.linalg.norm(self.y)):
                raise ValueError("y should equal A @ u_truth + eps")

    @property
    def n(self) -> int:
        """Dimension of the parameter space.

        Returns:
            int: n.
        """
        return self.A.shape[1]

    @property
    def m(self) -> int:
        """Dimension of the observation space.

        Returns:
            int: m.
        """
        return self.A.shape[0]

    @property
    def gamma_chol(self) -> torch.Tensor:
        """Lower Cholesky factor L of Γ = L Lᵀ.

        Returns:
            torch.Tensor: L.
        """
        return self._gamma_chol

    def gamma_inv(self, x: torch.Tensor) -> torch.Tensor:
        """Apply Γ⁻¹ to a vector or to the columns of a matrix.

        Args:
            x (torch.Tensor): Vector of length m or matrix with m rows.

        Returns:
            torch.Tensor: Γ⁻¹x.
        """
        if x.dim() == 1:
            return torch.cholesky_solve(x.unsqueeze(-1), self._gamma_chol).squeeze(-1)
        return torch.cholesky_solve(x, self._gamma_chol)

    @property
    def B(self) -> torch.Tensor:
        """The data precision in parameter space, AᵀΓ⁻¹A.

        Returns:
            torch.Tensor: Symmetric PSD n×n matrix.
        """
        B = self.A.T @ self.gamma_inv(self.A)
        return (B + B.T) / 2

    @property
    def data_term(self) -> torch.Tensor:
        """The vector AᵀΓ⁻¹y.

        Returns:
            torch.Tensor: Vector of length n.
        """
        return self.A.T @ self.gamma_inv(self.y)

    def whiten(self, x: torch.Tensor) -> torch.Tensor:
        """Apply L⁻¹ (Γ = L Lᵀ) to a vector or to the columns of a matrix.

        Args:
            x (torch.Tensor): Vector of length m or matrix with m rows.

        Returns:
            torch.Tensor: L⁻¹x, so that ‖L⁻¹x‖ = ‖x‖_Γ.
        """
        if x.dim() == 1:
            return torch.linalg.solve_triangular(
                self._gamma_chol, x.unsqueeze(-1), upper=False
            ).squeeze(-1)
        return torch.linalg.solve_triangular(self._gamma_chol, x, upper=False)

    def misfit_norm(self, residual: torch.Tensor) -> torch.Tensor:
        """Γ-weighted norm ‖r‖_Γ = ‖Γ^{-1/2} r‖ of an observation-space vector.

        Args:
            residual (torch.Tensor): Vector of length m.

        Returns:
            torch.Tensor: Scalar tensor.
        """
        return torch.linalg.norm(self.whiten(residual))

    def replace(self, **changes: Any) -> "InverseProblem":
        """Return a copy with some fields replaced.

        Args:
            **changes (Any): New values for A, Gamma, y, u_truth or eps.

        Returns:
            InverseProblem: The new problem.
        """
        fields = {
            "A": self.A,
            "Gamma": self.Gamma,
            "y": self.y,
            "u_truth": self.u_truth,
            "eps": self.eps,
        }
        fields.update(changes)
        return InverseProblem(**fields)

    def __str__(self) -> str:
        """Return the string representation of InverseProblem.

        Returns:
            str: String representation.
        """
        truth = "" if self.u_truth is None else ", with ground truth"
        return f"[{type(self).__name__}]: n={self.n}, m={self.m}{truth}"
