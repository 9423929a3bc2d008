"""State records of the eigenvalue/eigenvector system of the covariance."""

# stdlib
from typing import List

# third party
import torch


class EigenState:
    """Eigenpairs (λᵢ, vᵢ) of C(t) at time t.

    Columns of ``vectors`` are the vᵢ. Along an integration the pairs keep
    their trajectory order, which is descending unless eigenvalues crossed;
    ``sorted`` returns the descending view.

    Attributes:
        lambdas (torch.Tensor): Eigenvalues.
        vectors (torch.Tensor): Orthonormal eigenvectors as columns.
        t (float): Time.
    """

    __slots__ = {"lambdas", "vectors", "t"}

    def __init__(self, lambdas: torch.Tensor, vectors: torch.Tensor, t: float) -> None:
        """Initializer for the EigenState.

        Args:
            lambdas (torch.Tensor): Eigenvalues.
            vectors (torch.Tensor): Eigenvectors as columns.
            t (float): Time.
        """
        self.lambdas = lambdas
        self.vectors = vectors
        self.t = t

    def sorted(self) -> "EigenState":
        """Pairs ordered by descending eigenvalue.

        Returns:
            EigenState: The reordered state.
        """
        order = torch.argsort(self.lambdas, descending=True)
        return EigenState(self.lambdas[order], self.vectors[:, order], self.t)

    def reconstruct(self) -> torch.Tensor:
        """The matrix V·diag(λ)·Vᵀ.

        Returns:
            torch.Tensor: Symmetric n×n matrix.
        """
        C = (self.vectors * self.lambdas) @ self.vectors.T
        return (C + C.T) / 2

    def __str__(self) -> str:
        """Return the string representation of EigenState.

        Returns:
            str: String representation.
        """
        return f"[{type(self).__name__}]: t={self.t}, lambdas={self.lambdas.tolist()}"


class CrossingEvent:
    """Two eigenvalues met (gap below tolerance or order swapped) during a step.

    Attributes:
        t (float): Time at the end of the step.
        i (int): First trajectory index.
        j (int): Second trajectory index.
    """

    __slots__ = {"t", "i", "j"}

    def __init__(self, t: float, i: int, j: int) -> None:
        """Initializer for the CrossingEvent.

        Args:
            t (float): Time at the end of the step.
            i (int): First trajectory index.
            j (int): Second trajectory index.
        """
        self.t = t
        self.i = i
        self.j = j

    def __str__(self) -> str:
        """Return the string representation of CrossingEvent.

        Returns:
            str: String representation.
        """
        return f"[{type(self).__name__}]: t={self.t}, pair=({self.i}, {self.j})"


class DaeResult:
    """Recorded states and crossing events of one integration.

    Attributes:
        states (List[EigenState]): States at the output times.
        crossings (List[CrossingEvent]): Detected crossings.
    """

    __slots__ = {"states", "crossings"}

    def __init__(
        self, states: List[EigenState], crossings: List[CrossingEvent]
    ) -> None:
        """Initializer for the DaeResult.

        Args:
            states (List[EigenState]): States at the output times.
            crossings (List[CrossingEvent]): Detected crossings.
        """
        self.states = states
        self.crossings = crossings

    @property
    def times(self) -> List[float]:
        """Output times.

        Returns:
            List[float]: Times of the recorded states.
        """
        return [state.t for state in self.states]

    def largest_eigenvalue_path(self) -> torch.Tensor:
        """λ₁(t) = max eigenvalue at each recorded time.

        Returns:
            torch.Tensor: Vector with one value per state.
        """
        return torch.stack([state.lambdas.max() for state in self.states])
