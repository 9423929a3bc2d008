"""Weighted inner products and Γ-orthogonal projections."""

# stdlib
from typing import Any

# third party
import torch

from ekiflow.utils import as_tensor
from ekiflow.utils import check_square


class WeightedNorm:
    """Inner product ⟨x, y⟩_H = ⟨x, H⁻¹y⟩ for an SPD weight H.

    Attributes:
        H (torch.Tensor): The SPD weight.
        Hinv_factor (torch.Tensor): Lower Cholesky factor of H, used to apply H⁻¹.
    """

    __slots__ = {"H", "Hinv_factor"}

    def __init__(self, H: Any) -> None:
        """Initializer for the WeightedNorm.

        Args:
            H (Any): SPD weight matrix.

        Raises:
            ValueError: If H is not square or not positive definite.
        """
        self.H = as_tensor(H)
        check_square(self.H, "H")

        factor, info = torch.linalg.cholesky_ex(self.H)
        if info.item() != 0:
            raise ValueError("H should be symmetric positive definite")
        self.Hinv_factor = factor

    @property
    def dim(self) -> int:
        """Dimension of the space.

        Returns:
            int: Size of H.
        """
        return self.H.shape[0]

    def apply_inverse(self, x: torch.Tensor) -> torch.Tensor:
        """Apply H⁻¹ to a vector.

        Args:
            x (torch.Tensor): Vector.

        Returns:
            torch.Tensor: H⁻¹x.
        """
        return torch.cholesky_solve(x.reshape(-1, 1), self.Hinv_factor).reshape(-1)

    def inner(self, x: Any, y: Any) -> float:
        """Weighted inner product ⟨x, H⁻¹y⟩.

        Args:
            x (Any): First vector.
            y (Any): Second vector.

        Returns:
            float: The inner product.

        Raises:
            ValueError: If the vector sizes do not match H.
        """
        x = as_tensor(x).reshape(-1)
        y = as_tensor(y).reshape(-1)
        if x.shape[0] != self.dim or y.shape[0] != self.dim:
            raise ValueError(
                f"Vectors of size {x.shape[0]} and {y.shape[0]} "
                f"do not match weight of size {self.dim}"
            )
        return float(x @ self.apply_inverse(y))

    def norm(self, x: Any) -> float:
        """Weighted norm ‖x‖_H.

        Args:
            x (Any): Vector.

        Returns:
            float: The norm.
        """
        return max(self.inner(x, x), 0.0) ** 0.5


def weighted_inner(x: Any, y: Any, H: WeightedNorm) -> float:
    """Weighted inner product ⟨x, H⁻¹y⟩.

    Args:
        x (Any): First vector.
        y (Any): Second vector.
        H (WeightedNorm): The weight.

    Returns:
        float: The inner product.
    """
    return H.inner(x, y)


def gamma_preimage(y: Any, A: Any, Gamma: Any) -> torch.Tensor:
    """Minimum-norm minimizer x* of ‖Ax − y‖_Γ.

    Args:
        y (Any): Datum of length m.
        A (Any): Forward operator m×n.
        Gamma (Any): SPD noise covariance m×m.

    Returns:
        torch.Tensor: x* of length n.

    Raises:
        ValueError: If the dimensions are inconsistent or Gamma is not SPD.
    """
    y = as_tensor(y).reshape(-1)
    A = as_tensor(A)
    Gamma = as_tensor(Gamma)

    if A.dim() != 2 or A.shape[0] != y.shape[0]:
        raise ValueError(f"A of shape {tuple(A.shape)} does not map onto y")
    if check_square(Gamma, "Gamma") != y.shape[0]:
        raise ValueError("Gamma does not match the size of y")

    chol, info = torch.linalg.cholesky_ex(Gamma)
    if info.item() != 0:
        raise ValueError("Gamma should be symmetric positive definite")

    A_white = torch.linalg.solve_triangular(chol, A, upper=False)
    y_white = torch.linalg.solve_triangular(chol, y.unsqueeze(-1), upper=False)
    return (torch.linalg.pinv(A_white) @ y_white).squeeze(-1)


def gamma_projection(y: Any, A: Any, Gamma: Any) -> torch.Tensor:
    """Γ-orthogonal projection of y onto the range of A.

    The residual y − Πy is Γ⁻¹-orthogonal to ran(A): AᵀΓ⁻¹(y − Πy) = 0.

    Args:
        y (Any): Datum of length m.
        A (Any): Forward operator m×n.
        Gamma (Any): SPD noise covariance m×m.

    Returns:
        torch.Tensor: Πy of length m.
    """
    return as_tensor(A) @ gamma_preimage(y, A, Gamma)
