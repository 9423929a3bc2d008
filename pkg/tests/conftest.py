# stdlib
from typing import Callable
from typing import Optional
from typing import Tuple

# third party
import pytest
import torch

from ekiflow.problem import InverseProblem
from ekiflow.utils import DTYPE
from ekiflow.utils import get_new_generator

ProblemSetup = Tuple[InverseProblem, torch.Tensor, torch.Tensor]


def random_spd(
    n: int, generator: torch.Generator, low: float = 0.1, high: float = 1.0
) -> torch.Tensor:
    Q, _ = torch.linalg.qr(torch.randn(n, n, generator=generator, dtype=DTYPE))
    evals = low + (high - low) * torch.rand(n, generator=generator, dtype=DTYPE)
    C = (Q * evals) @ Q.T
    return (C + C.T) / 2


@pytest.fixture
def get_random_problem() -> Callable[..., ProblemSetup]:
    def _helper_get_random_problem(
        n: int,
        m: Optional[int] = None,
        seed: int = 0,
        rank: Optional[int] = None,
        clean: bool = False,
    ) -> ProblemSetup:
        m = n if m is None else m
        generator = get_new_generator(seed)

        if rank is None:
            A = torch.randn(m, n, generator=generator, dtype=DTYPE)
        else:
            left = torch.randn(m, rank, generator=generator, dtype=DTYPE)
            A = left @ torch.randn(rank, n, generator=generator, dtype=DTYPE)
        A = A / torch.linalg.matrix_norm(A, ord=2)

        Gamma = random_spd(m, generator, low=0.5, high=1.5)
        u_truth = torch.randn(n, generator=generator, dtype=DTYPE)
        if clean:
            eps = torch.zeros(m, dtype=DTYPE)
        else:
            eps = 0.1 * torch.randn(m, generator=generator, dtype=DTYPE)

        prob = InverseProblem(
            A=A, Gamma=Gamma, y=A @ u_truth + eps, u_truth=u_truth, eps=eps
        )
        m0 = torch.randn(n, generator=generator, dtype=DTYPE)
        C0 = random_spd(n, generator)
        return prob, m0, C0

    return _helper_get_random_problem


@pytest.fixture
def diagonal_setup() -> ProblemSetup:
    """A = diag(4, 1), Γ = E, m0 = (4, 4), C0 = [[2, −1], [−1, 2]], y = 0."""
    prob = InverseProblem(A=[[4.0, 0.0], [0.0, 1.0]], Gamma=torch.eye(2), y=[0.0, 0.0])
    m0 = torch.tensor([4.0, 4.0], dtype=DTYPE)
    C0 = torch.tensor([[2.0, -1.0], [-1.0, 2.0]], dtype=DTYPE)
    return prob, m0, C0


@pytest.fixture
def nonmon_setup() -> ProblemSetup:
    """A = diag(100, 1), m0 = (100, 100), C0 = [[25, −24], [−24, 25]], y = 0."""
    prob = InverseProblem(
        A=[[100.0, 0.0], [0.0, 1.0]], Gamma=torch.eye(2), y=[0.0, 0.0]
    )
    m0 = torch.tensor([100.0, 100.0], dtype=DTYPE)
    C0 = torch.tensor([[25.0, -24.0], [-24.0, 25.0]], dtype=DTYPE)
    return prob, m0, C0


@pytest.fixture
def rank_one_setup() -> ProblemSetup:
    """A = [[0, 1]], Γ = [[1]], C0 = [[2, 1], [1, 1]]: μ = (1, 0)."""
    prob = InverseProblem(A=[[0.0, 1.0]], Gamma=[[1.0]], y=[0.0])
    m0 = torch.zeros(2, dtype=DTYPE)
    C0 = torch.tensor([[2.0, 1.0], [1.0, 1.0]], dtype=DTYPE)
    return prob, m0, C0


@pytest.fixture
def get_random_spd() -> Callable[..., torch.Tensor]:
    return random_spd
