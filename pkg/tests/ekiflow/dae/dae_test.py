# third party
import pytest
import torch

from ekiflow.dae import EigenState
from ekiflow.dae import compare_with_covariance
from ekiflow.dae import convexity_check
from ekiflow.dae import dae_rhs
from ekiflow.dae import eigenvalue_bounds
from ekiflow.dae import initial_state
from ekiflow.dae import integrate_dae
from ekiflow.flow import FlowConfig
from ekiflow.flow import covariance_at
from ekiflow.problem import InverseProblem
from ekiflow.utils import DTYPE

SPECTRUM_A = [[0.3, 0.05, 0.0], [0.0, 0.6, 0.05], [0.0, 0.0, 1.0]]
SPECTRUM_C0 = [[1.0, 0.05, 0.0], [0.05, 0.6, 0.05], [0.0, 0.05, 0.3]]


@pytest.fixture
def spectrum_setup():
    prob = InverseProblem(A=SPECTRUM_A, Gamma=torch.eye(3), y=torch.zeros(3))
    cfg = FlowConfig.from_problem(prob, torch.zeros(3), SPECTRUM_C0, alpha=2.0)
    return prob, cfg


def test_initial_state_descending(spectrum_setup) -> None:
    prob, cfg = spectrum_setup
    state = initial_state(cfg.C0, prob.A, 1e-9)

    assert torch.all(state.lambdas[:-1] > state.lambdas[1:])
    assert torch.allclose(state.reconstruct(), cfg.C0, atol=1e-12)
    assert state.t == 0.0


def test_initial_state_degenerate() -> None:
    # C0 = E: any basis diagonalizes it; the chosen one makes AV Γ-orthogonal
    A = torch.tensor([[1.0, 1.0], [0.0, 1.0]], dtype=DTYPE)
    state = initial_state(torch.eye(2), A, 1e-9)

    AV = A @ state.vectors
    gram = AV.T @ AV
    assert gram[0, 1].abs() <= 1e-12
    assert torch.allclose(state.vectors.T @ state.vectors, torch.eye(2).double())


def test_dae_rhs_diagonal() -> None:
    A = torch.diag(torch.tensor([1.0, 2.0], dtype=DTYPE))
    state = EigenState(
        lambdas=torch.tensor([3.0, 1.0], dtype=DTYPE),
        vectors=torch.eye(2, dtype=DTYPE),
        t=0.0,
    )
    lambda_dot, vector_dot = dae_rhs(state, A, torch.eye(2), alpha=1.0)

    # λ̇ᵢ = −α·λᵢ²·‖Avᵢ‖²
    assert torch.allclose(lambda_dot, torch.tensor([-9.0, -4.0], dtype=DTYPE))
    assert torch.equal(vector_dot, torch.zeros(2, 2, dtype=DTYPE))


def test_dae_diagonal_riccati() -> None:
    prob = InverseProblem(A=[[1.0, 0.0], [0.0, 2.0]], Gamma=torch.eye(2), y=[0, 0])
    cfg = FlowConfig.from_problem(prob, torch.zeros(2), [[3.0, 0.0], [0.0, 1.0]], 1.0)

    result = integrate_dae(cfg, prob.A, prob.Gamma, t_end=1.0, dt=1e-3)
    final = result.states[-1]

    # λ₁ = 3/(1 + 3t), λ₂ = 1/(1 + 4t)
    assert final.t == pytest.approx(1.0)
    expected = torch.tensor([0.75, 0.2], dtype=DTYPE)
    assert torch.allclose(final.lambdas, expected, rtol=1e-8)
    assert result.crossings == []
    assert len(result.states) == 1001


def test_dae_matches_covariance(spectrum_setup) -> None:
    prob, cfg = spectrum_setup
    times = [0.1, 1.0, 10.0]

    result = integrate_dae(
        cfg, prob.A, prob.Gamma, t_end=10.0, dt=5e-3, output_times=times
    )
    assert result.times[0] == 0.0
    assert result.times[1:] == pytest.approx(times)

    for state in result.states[1:]:
        value_error, angle = compare_with_covariance(state, covariance_at(cfg, state.t))
        assert value_error <= 1e-5
        assert angle <= 1e-5
        assert torch.allclose(
            state.reconstruct(), covariance_at(cfg, state.t), atol=1e-5
        )


def test_dae_crossing() -> None:
    # λ₁ = 2/(1 + 4t) meets the constant λ₂ = 1 at t = 1/4
    prob = InverseProblem(A=[[1.0, 0.0]], Gamma=[[1.0]], y=[0.0])
    cfg = FlowConfig.from_problem(prob, torch.zeros(2), [[2.0, 0.0], [0.0, 1.0]])

    result = integrate_dae(cfg, prob.A, prob.Gamma, t_end=1.0, dt=1e-3)

    assert len(result.crossings) >= 1
    assert result.crossings[0].t == pytest.approx(0.25, abs=2e-3)
    assert {result.crossings[0].i, result.crossings[0].j} == {0, 1}

    final = result.states[-1]
    # trajectory 0 keeps decaying
    assert final.lambdas[0].item() == pytest.approx(0.4, rel=1e-6)
    assert final.lambdas[1].item() == pytest.approx(1.0)
    assert torch.allclose(final.sorted().lambdas, torch.tensor([1.0, 0.4]).double())


def test_eigenvalue_bounds(spectrum_setup) -> None:
    prob, cfg = spectrum_setup
    times = [0.5, 2.0, 10.0]
    result = integrate_dae(cfg, prob.A, prob.Gamma, 10.0, 5e-3, output_times=times)
    state0 = result.states[0]

    for state in result.states[1:]:
        current = state.sorted().lambdas
        lower, lambda1_lower, lambdan_upper = eigenvalue_bounds(
            state0, prob.A, prob.Gamma, cfg.alpha, state.t
        )
        assert torch.all(current >= lower - 1e-10)
        assert current[0].item() >= lambda1_lower - 1e-10
        assert current[-1].item() <= lambdan_upper + 1e-10

    with pytest.raises(ValueError):
        eigenvalue_bounds(state0, prob.A, prob.Gamma, cfg.alpha, -1.0)


def test_largest_eigenvalue_convex(spectrum_setup) -> None:
    prob, cfg = spectrum_setup
    times = [0.1 * k for k in range(101)]
    result = integrate_dae(cfg, prob.A, prob.Gamma, 10.0, 5e-3, output_times=times)

    assert convexity_check(result.largest_eigenvalue_path())


def test_convexity_check() -> None:
    t = torch.linspace(0, 1, 11, dtype=DTYPE)

    assert convexity_check(1 / (1 + t))
    assert not convexity_check(torch.sin(3 * t))

    with pytest.raises(ValueError):
        convexity_check([1.0, 0.5])


def test_dae_trace(spectrum_setup) -> None:
    prob, cfg = spectrum_setup
    times = [0.5, 2.0, 10.0]
    result = integrate_dae(cfg, prob.A, prob.Gamma, 10.0, 5e-3, output_times=times)

    for state in result.states:
        trace = torch.trace(covariance_at(cfg, state.t)).item()
        assert state.lambdas.sum().item() == pytest.approx(trace, abs=1e-5)


def test_extreme_directions_monotone(spectrum_setup) -> None:
    prob, cfg = spectrum_setup
    times = [0.1 * k for k in range(101)]
    result = integrate_dae(cfg, prob.A, prob.Gamma, 10.0, 5e-3, output_times=times)
    assert result.crossings == []

    # ‖Av‖² of the largest and smallest eigenvalue's eigenvector
    weights = torch.stack(
        [
            torch.linalg.norm(prob.A @ state.sorted().vectors, dim=0) ** 2
            for state in result.states
        ]
    )
    largest, smallest = weights[:, 0], weights[:, -1]
    assert torch.all(largest[1:] - largest[:-1] <= 1e-8)
    assert torch.all(smallest[1:] - smallest[:-1] >= -1e-8)
    assert largest[-1] < largest[0]
    assert smallest[-1] > smallest[0]


@pytest.mark.slow
@pytest.mark.parametrize(
    "A, C0",
    [
        (SPECTRUM_A, SPECTRUM_C0),
        ([[1.0, 0.0]], [[2.0, 1.0], [1.0, 1.0]]),
    ],
)
def test_long_time_dichotomy(A, C0) -> None:
    prob = InverseProblem(A=A, Gamma=torch.eye(len(A)), y=torch.zeros(len(A)))
    n = prob.A.shape[1]
    cfg = FlowConfig.from_problem(prob, torch.zeros(n), C0, alpha=2.0)

    result = integrate_dae(cfg, prob.A, prob.Gamma, 1e3, 5e-2, output_times=[1e3])
    final = result.states[-1]

    # each eigenpair either collapses or leaves the range of Aᵀ
    image = torch.linalg.norm(prob.A @ final.vectors, dim=0)
    assert torch.all(torch.minimum(final.lambdas, image) <= 1e-2)
