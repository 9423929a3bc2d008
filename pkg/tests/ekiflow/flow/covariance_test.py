# third party
import pytest
import torch

from ekiflow.flow import CovOperatorA
from ekiflow.flow import FlowConfig
from ekiflow.flow import alpha_averaged
from ekiflow.flow import apply_operator_A
from ekiflow.flow import asymptotic_profile
from ekiflow.flow import covariance_at
from ekiflow.flow import covariance_limit
from ekiflow.flow import covariance_path
from ekiflow.flow import covariance_resolvent_form
from ekiflow.flow import integrate_covariance_ode
from ekiflow.flow import self_similar_evolution
from ekiflow.problem import InverseProblem
from ekiflow.utils import DTYPE
from ekiflow.utils import get_new_generator


def _rel(a: torch.Tensor, b: torch.Tensor) -> float:
    return (torch.linalg.norm(a - b) / torch.linalg.norm(b)).item()


def test_alpha_averaged() -> None:
    assert alpha_averaged(1) == 2.0
    assert alpha_averaged(10) == pytest.approx(1.1)

    with pytest.raises(ValueError):
        alpha_averaged(0)


def test_flow_config_invalid(diagonal_setup) -> None:
    prob, m0, C0 = diagonal_setup

    with pytest.raises(ValueError):
        FlowConfig.from_problem(prob, m0, C0, alpha=0.5)

    with pytest.raises(ValueError):
        FlowConfig.from_problem(prob, torch.zeros(3), C0)


def test_covariance_initial(diagonal_setup) -> None:
    prob, m0, C0 = diagonal_setup
    cfg = FlowConfig.from_problem(prob, m0, C0)

    assert torch.allclose(covariance_at(cfg, 0.0), C0, atol=1e-12)


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_covariance_rank_one(rank_one_setup, alpha) -> None:
    prob, m0, C0 = rank_one_setup
    cfg = FlowConfig.from_problem(prob, m0, C0, alpha=alpha)
    t = 1.0

    # C(t) = [[a + αt·det C₀, b], [b, d]] / (1 + αtd) with a=2, b=1, d=1
    expected = torch.tensor(
        [[2.0 + alpha * t, 1.0], [1.0, 1.0]], dtype=DTYPE
    ) / (1 + alpha * t)
    assert torch.allclose(covariance_at(cfg, t), expected, atol=1e-12)

    limit = covariance_limit(cfg)
    assert torch.allclose(limit, torch.tensor([[1.0, 0.0], [0.0, 0.0]]).double())

    profile = asymptotic_profile(cfg)
    assert torch.allclose(profile, torch.ones(2, 2, dtype=DTYPE) / alpha, atol=1e-12)


def test_covariance_forms_agree(get_random_problem) -> None:
    for seed in range(10):
        prob, m0, C0 = get_random_problem(5, m=3, seed=seed)
        cfg = FlowConfig.from_problem(prob, m0, C0, alpha=1.5)

        for t in (0.1, 1.0, 10.0):
            closed = covariance_at(cfg, t)
            resolvent = covariance_resolvent_form(C0, prob.B, cfg.alpha, t)
            assert _rel(closed, resolvent) <= 1e-9
            assert torch.allclose(closed, closed.T, atol=1e-14)
            assert torch.linalg.eigvalsh(closed).min() >= -1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("alpha", [1.0, 1.25, 2.0])
def test_covariance_rk4_oracle(get_random_problem, n, alpha) -> None:
    problems = [get_random_problem(n, seed=100 * n + i) for i in range(4)]
    B = torch.stack([prob.B for prob, _, _ in problems])
    C0 = torch.stack([C0 for _, _, C0 in problems])

    oracle = integrate_covariance_ode(alpha, B, C0, t_end=1.0, dt=1e-4)
    for (prob, m0, C0_i), expected in zip(problems, oracle):
        cfg = FlowConfig.from_problem(prob, m0, C0_i, alpha=alpha)
        assert _rel(covariance_at(cfg, 1.0), expected) <= 1e-6


def test_covariance_finite_difference(get_random_problem) -> None:
    h = 1e-6
    for seed in range(20):
        prob, m0, C0 = get_random_problem(4, seed=seed)
        cfg = FlowConfig.from_problem(prob, m0, C0)
        op = CovOperatorA.from_problem(prob, cfg.alpha)

        t = 0.5
        C_t = covariance_at(cfg, t)
        derivative = (covariance_at(cfg, t + h) - covariance_at(cfg, t - h)) / (2 * h)
        assert _rel(-derivative, op(C_t)) <= 1e-4


def test_covariance_time_rescaling(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, seed=3)
    cfg_1 = FlowConfig.from_problem(prob, m0, C0, alpha=1.0)
    cfg_2 = cfg_1.with_alpha(2.0)

    for t in (0.2, 1.0, 7.0):
        assert _rel(covariance_at(cfg_1, t), covariance_at(cfg_2, t / 2)) <= 1e-12


def test_covariance_monotone_decay(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, seed=5)
    cfg = FlowConfig.from_problem(prob, m0, C0)
    path = covariance_path(cfg, torch.linspace(0, 5, 21))

    generator = get_new_generator(0)
    W = torch.randn(10, 4, generator=generator, dtype=DTYPE)
    W = W / torch.linalg.norm(W, dim=1, keepdim=True)

    quad = torch.einsum("ki,tij,kj->tk", W, path, W)
    assert torch.all(quad[1:] <= quad[:-1] + 1e-10)


def test_covariance_path_matches_pointwise(diagonal_setup) -> None:
    prob, m0, C0 = diagonal_setup
    cfg = FlowConfig.from_problem(prob, m0, C0)
    times = [0.0, 0.5, 2.0]

    path = covariance_path(cfg, times)
    for t, C in zip(times, path):
        assert torch.allclose(C, covariance_at(cfg, t))

    with pytest.raises(ValueError):
        covariance_path(cfg, [0.0, -1.0])

    with pytest.raises(ValueError):
        covariance_at(cfg, -0.1)


def test_covariance_limit(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, seed=1)
    cfg = FlowConfig.from_problem(prob, m0, C0)
    zeros = torch.zeros(4, 4, dtype=DTYPE)
    assert torch.allclose(covariance_limit(cfg), zeros, atol=1e-12)

    zero = InverseProblem(A=torch.zeros(2, 4), Gamma=torch.eye(2), y=torch.zeros(2))
    cfg = FlowConfig.from_problem(zero, m0, C0)
    assert torch.allclose(covariance_limit(cfg), C0, atol=1e-12)


def test_covariance_limit_rank_deficient(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(5, m=3, seed=2, rank=2)
    cfg = FlowConfig.from_problem(prob, m0, C0)
    limit = covariance_limit(cfg)

    A_norm = torch.linalg.norm(prob.A)
    assert torch.linalg.norm(prob.A @ limit) <= 1e-9 * A_norm * torch.linalg.norm(C0)
    assert torch.allclose(limit, limit.T, atol=1e-14)

    projector = limit @ torch.linalg.inv(C0)
    assert torch.allclose(projector @ projector, projector, atol=1e-9)


def test_asymptotic_profile(get_random_spd) -> None:
    A = [[1.0, 0.2, 0.0, 0.0], [0.0, 0.6, 0.1, 0.0]]
    prob = InverseProblem(A=A, Gamma=torch.eye(2), y=torch.zeros(2))
    m0 = torch.zeros(4, dtype=DTYPE)
    C0 = get_random_spd(4, get_new_generator(4))
    cfg = FlowConfig.from_problem(prob, m0, C0)
    op = CovOperatorA.from_problem(prob, cfg.alpha)
    profile = asymptotic_profile(cfg)

    assert _rel(apply_operator_A(op, profile), profile) <= 1e-8

    t = 1e6
    scaled = t * (covariance_at(cfg, t) - covariance_limit(cfg))
    assert _rel(scaled, profile) <= 1e-4


def test_asymptotic_profile_identity() -> None:
    prob = InverseProblem(A=torch.eye(3), Gamma=torch.eye(3), y=torch.zeros(3))
    cfg = FlowConfig.from_problem(prob, torch.zeros(3), torch.eye(3), alpha=2.0)

    expected = 0.5 * torch.eye(3, dtype=DTYPE)
    assert torch.allclose(asymptotic_profile(cfg), expected)


def test_self_similar_evolution() -> None:
    op = CovOperatorA(alpha=2.0, B=torch.eye(2))

    # 𝒜(E) = 2·E, so C(t) = E/(1 + 2t)
    result = self_similar_evolution(torch.eye(2), 2.0, op, 0.5)
    assert torch.allclose(result, 0.5 * torch.eye(2, dtype=DTYPE))

    zero = self_similar_evolution(torch.zeros(2, 2), 0.0, op, 3.0)
    assert torch.equal(zero, torch.zeros(2, 2, dtype=DTYPE))

    with pytest.raises(ValueError):
        self_similar_evolution(torch.eye(2), 1.0, op, 0.5)


def test_self_similar_profile(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, m=2, seed=6)
    cfg = FlowConfig.from_problem(prob, m0, C0)
    op = CovOperatorA.from_problem(prob, cfg.alpha)
    profile = asymptotic_profile(cfg)

    for t in (0.1, 1.0, 10.0):
        expected = covariance_resolvent_form(profile, prob.B, cfg.alpha, t)
        result = self_similar_evolution(profile, 1.0, op, t)
        assert _rel(result, expected) <= 1e-8


def test_apply_operator_A(diagonal_setup) -> None:
    prob, _, C0 = diagonal_setup
    op = CovOperatorA.from_problem(prob, 2.0)

    zeros = torch.zeros(2, 2, dtype=DTYPE)
    assert torch.equal(apply_operator_A(op, zeros), zeros)
    assert torch.allclose(op(C0), 2.0 * C0 @ prob.B @ C0)

    with pytest.raises(ValueError):
        apply_operator_A(op, torch.eye(3))
