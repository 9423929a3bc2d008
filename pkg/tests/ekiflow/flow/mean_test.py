# stdlib
import math

# third party
import pytest
import torch

from ekiflow.flow import FlowConfig
from ekiflow.flow import asymptotic_limit
from ekiflow.flow import integrate_moment_odes
from ekiflow.flow import map_estimator
from ekiflow.flow import map_gradient
from ekiflow.flow import mean_at
from ekiflow.flow import mean_path
from ekiflow.flow import mean_solution
from ekiflow.flow import minimal_norm_solution
from ekiflow.flow import rate_certificates
from ekiflow.flow import rate_errors
from ekiflow.flow import solution_with_truth
from ekiflow.flow import strip_orthogonal_data
from ekiflow.problem import InverseProblem
from ekiflow.utils import DTYPE
from ekiflow.utils import get_new_generator


def _rel(a: torch.Tensor, b: torch.Tensor) -> float:
    return (torch.linalg.norm(a - b) / torch.linalg.norm(b)).item()


def test_mean_initial(diagonal_setup) -> None:
    prob, m0, C0 = diagonal_setup
    cfg = FlowConfig.from_problem(prob, m0, C0)

    assert torch.allclose(mean_at(cfg, prob, m0, 0.0), m0, atol=1e-12)
    assert torch.equal(mean_solution(cfg, prob, m0, 0.0).x, m0)

    with pytest.raises(ValueError):
        mean_at(cfg, prob, m0, -1.0)


@pytest.mark.parametrize("alpha", [1.0, 1.25, 2.0])
def test_mean_rk4_oracle(get_random_problem, alpha) -> None:
    for seed in range(5):
        prob, m0, C0 = get_random_problem(4, m=3, seed=seed)
        cfg = FlowConfig.from_problem(prob, m0, C0, alpha=alpha)
        b = prob.data_term

        _, x = integrate_moment_odes(alpha, prob.B, b, C0, m0, t_end=1.0)
        assert _rel(mean_at(cfg, prob, m0, 1.0), x) <= 1e-6


def test_mean_path(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(3, seed=2)
    cfg = FlowConfig.from_problem(prob, m0, C0)
    times = [0.0, 0.3, 4.0]

    path = mean_path(cfg, prob, m0, times)
    assert path.shape == (3, 3)
    for t, x in zip(times, path):
        assert torch.allclose(x, mean_at(cfg, prob, m0, t), atol=1e-12)

    particles = torch.stack([m0, 2 * m0, -m0])
    batch = mean_path(cfg, prob, particles, times)
    assert batch.shape == (3, 3, 3)
    for j, x0 in enumerate(particles):
        assert torch.allclose(batch[-1, j], mean_at(cfg, prob, x0, 4.0), atol=1e-12)

    with pytest.raises(ValueError):
        mean_path(cfg, prob, m0, [-1.0])


def test_solution_with_truth(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, m=2, seed=3)
    cfg = FlowConfig.from_problem(prob, m0, C0, alpha=1.5)

    for t in (0.0, 0.5, 5.0):
        split = solution_with_truth(cfg, prob, m0, t)
        assert torch.allclose(split, mean_at(cfg, prob, m0, t), atol=1e-10)

    with pytest.raises(ValueError):
        solution_with_truth(cfg, prob.replace(u_truth=None, eps=None), m0, 1.0)


def test_asymptotic_limit_noise_free(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, m=2, seed=4, clean=True)
    cfg = FlowConfig.from_problem(prob, m0, C0, alpha=1.0)
    limit = asymptotic_limit(cfg, prob, m0)

    assert torch.allclose(limit.noise_shift, torch.zeros(4, dtype=DTYPE), atol=1e-12)
    assert torch.allclose(prob.A @ limit.x_infinity, prob.y, atol=1e-10)

    far = mean_at(cfg, prob, m0, 1e10)
    assert torch.allclose(far, limit.x_infinity, atol=1e-4)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0])
def test_asymptotic_limit_independent_of_alpha(get_random_problem, alpha) -> None:
    prob, m0, C0 = get_random_problem(4, m=2, seed=4, clean=True)
    reference = FlowConfig.from_problem(prob, m0, C0, alpha=1.0)
    cfg = reference.with_alpha(alpha)

    limit = asymptotic_limit(cfg, prob, m0)
    assert torch.allclose(
        limit.x_infinity, asymptotic_limit(reference, prob, m0).x_infinity, atol=1e-12
    )

    far = mean_at(cfg, prob, m0, 1e12)
    assert torch.allclose(far, limit.x_infinity, atol=1e-3)


def test_asymptotic_limit_without_truth(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, m=2, seed=4, clean=True)
    cfg = FlowConfig.from_problem(prob, m0, C0)
    with_truth = asymptotic_limit(cfg, prob, m0)
    without = asymptotic_limit(cfg, prob.replace(u_truth=None, eps=None), m0)

    assert torch.allclose(with_truth.x_infinity, without.x_infinity, atol=1e-9)


def test_asymptotic_limit_noisy(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(3, seed=5)
    cfg = FlowConfig.from_problem(prob, m0, C0)
    limit = asymptotic_limit(cfg, prob, m0)

    # full rank: the limit solves Ax = y
    expected = torch.linalg.solve(prob.A, prob.y)
    assert torch.allclose(limit.x_infinity, expected, atol=1e-9)
    assert torch.linalg.norm(limit.noise_shift) > 0


def test_minimal_norm_solution() -> None:
    C0 = torch.eye(2, dtype=DTYPE)
    x = minimal_norm_solution(C0, [1.0, 1.0], [[1.0, 0.0]], [[1.0]], [3.0])
    assert torch.allclose(x, torch.tensor([3.0, 1.0], dtype=DTYPE))

    with pytest.raises(ValueError):
        A = [[1.0, 0.0], [2.0, 0.0]]
        minimal_norm_solution(C0, [0.0, 0.0], A, torch.eye(2), [1.0, 0.0])

    with pytest.raises(ValueError):
        minimal_norm_solution(-C0, [0.0, 0.0], [[1.0, 0.0]], [[1.0]], [1.0])


def test_rate_certificates(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, m=3, seed=6, clean=True)

    for alpha in (1.0, 2.0):
        cfg = FlowConfig.from_problem(prob, m0, C0, alpha=alpha)
        assert rate_certificates(cfg, prob, m0, 0.0) == (math.inf, math.inf)

        for t in (1e2, 1e4, 1e6):
            param, obs = rate_errors(cfg, prob, m0, t)
            bound_param, bound_obs = rate_certificates(cfg, prob, m0, t)
            assert param <= bound_param * (1 + 1e-8)
            assert obs <= bound_obs * (1 + 1e-8)


def test_rate_certificates_noisy(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(3, seed=7)
    cfg = FlowConfig.from_problem(prob, m0, C0)

    with pytest.raises(ValueError):
        rate_certificates(cfg, prob, m0, 1.0)


def test_map_estimator(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, m=3, seed=8)
    args = (C0, m0, prob.A, prob.Gamma, prob.y)

    assert torch.allclose(map_estimator(*args, 0.0), m0)

    for t in (0.5, 1.0, 3.0):
        u = map_estimator(*args, t)
        assert torch.linalg.norm(map_gradient(*args, t, u)) <= 1e-9

    # the MAP with unit data weight is the α = 1 mean at t = 1
    cfg = FlowConfig.from_problem(prob, m0, C0, alpha=1.0)
    assert torch.allclose(map_estimator(*args, 1.0), mean_at(cfg, prob, m0, 1.0))


def test_strip_orthogonal_data(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(2, m=4, seed=9)
    stripped = strip_orthogonal_data(prob)

    assert torch.allclose(stripped.data_term, prob.data_term, atol=1e-12)
    assert not torch.allclose(stripped.y, prob.y)

    cfg = FlowConfig.from_problem(prob, m0, C0)
    for t in (0.5, 2.0):
        assert torch.allclose(
            mean_at(cfg, stripped, m0, t), mean_at(cfg, prob, m0, t), atol=1e-12
        )


def test_mean_rank_deficient_direction() -> None:
    # A sees only the second coordinate, the first moves through C₀
    prob = InverseProblem(A=[[0.0, 1.0]], Gamma=[[1.0]], y=[1.0])
    C0 = torch.tensor([[2.0, 1.0], [1.0, 1.0]], dtype=DTYPE)
    m0 = torch.zeros(2, dtype=DTYPE)
    cfg = FlowConfig.from_problem(prob, m0, C0, alpha=1.0)

    generator = get_new_generator(0)
    x0 = torch.randn(2, generator=generator, dtype=DTYPE)
    _, x = integrate_moment_odes(1.0, prob.B, prob.data_term, C0, x0, t_end=2.0)
    assert torch.allclose(mean_at(cfg, prob, x0, 2.0), x, atol=1e-8)
