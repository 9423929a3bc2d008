# third party
import pytest
import torch

from ekiflow.diagnostics import canonical_reference
from ekiflow.diagnostics import compute_spreads
from ekiflow.diagnostics import fwd_spread_bound
from ekiflow.diagnostics import lyapunov_value
from ekiflow.diagnostics import monotonicity_report
from ekiflow.diagnostics import spreads_along
from ekiflow.ensemble import Ensemble
from ekiflow.ensemble import SimConfig
from ekiflow.ensemble import empirical_moments
from ekiflow.ensemble import init_from_prior
from ekiflow.ensemble import propagate_closed_form
from ekiflow.ensemble import run_deterministic
from ekiflow.flow import FlowConfig
from ekiflow.flow import mean_path
from ekiflow.linalg import gamma_preimage
from ekiflow.problem import InverseProblem
from ekiflow.utils import DTYPE


def test_spreads_by_hand() -> None:
    prob = InverseProblem(A=[[2.0, 0.0], [0.0, 1.0]], Gamma=torch.eye(2), y=[0, 0])
    ens = Ensemble([[1.0, 0.0], [-1.0, 0.0]])
    record = compute_spreads(ens, prob, [0.0, 1.0], t=0.5)

    assert record.t == 0.5
    assert record.V_e == pytest.approx(0.5)
    assert record.V_r == pytest.approx(1.0)
    assert record.fV_e == pytest.approx(2.0)
    assert record.fV_r == pytest.approx(2.5)
    assert record.mean_residual_norm == pytest.approx(1.0)
    assert record.mean_fwd_residual == pytest.approx(0.5)
    assert record.lyapunov is None


def test_spread_identities(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, m=3, seed=0)
    ens = init_from_prior(m0, C0, 7, seed=1)
    record = compute_spreads(ens, prob, prob.u_truth)

    half_sq = 0.5 * record.mean_residual_norm ** 2
    assert record.V_r == pytest.approx(record.V_e + half_sq, rel=1e-10)
    assert record.fV_r == pytest.approx(
        record.fV_e + record.mean_fwd_residual, rel=1e-10
    )


def test_lyapunov_value() -> None:
    S = torch.tensor([[2.0, 0.0], [0.0, 1.0]], dtype=DTYPE)
    assert lyapunov_value([2.0, 1.0], [0.0, 0.0], S) == pytest.approx(1.0)

    batch = torch.tensor([[2.0, 1.0], [0.0, 0.0], [4.0, 0.0]], dtype=DTYPE)
    values = lyapunov_value(batch, [0.0, 0.0], S)
    assert torch.allclose(values, torch.tensor([1.0, 0.0, 2.0], dtype=DTYPE))


def test_spreads_along(diagonal_setup) -> None:
    prob, m0, C0 = diagonal_setup
    ens = init_from_prior(m0, C0, 10, seed=0, moment_matched=True)
    run = run_deterministic(ens, prob, SimConfig(dt=1e-2, t_end=1.0, record_every=10))

    cfg = FlowConfig.from_problem(prob, m0, C0)
    records = spreads_along(run, prob, torch.zeros(2), spectral=cfg.spectral)

    assert len(records) == len(run)
    assert [record.t for record in records] == pytest.approx(run.times.tolist())
    assert all(record.lyapunov is not None for record in records)
    assert records[0].V_e == pytest.approx(0.5 * torch.trace(C0).item())


def test_canonical_reference(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(4, m=2, seed=3)
    ens = init_from_prior(m0, C0, 8, seed=4)
    m, C = empirical_moments(ens)
    cfg = FlowConfig.from_problem(prob, m, C)

    reference = canonical_reference(cfg, prob, ens)
    assert torch.allclose(prob.A @ reference, prob.A @ prob.u_truth, atol=1e-10)

    without_truth = prob.replace(u_truth=None, eps=None)
    reference = canonical_reference(cfg, without_truth, ens)
    assert torch.allclose(prob.A @ reference, prob.y, atol=1e-10)


def test_fwd_spread_bound(diagonal_setup) -> None:
    prob, m0, C0 = diagonal_setup
    J = 10
    ens = init_from_prior(m0, C0, J, seed=2)
    run = run_deterministic(ens, prob, SimConfig(dt=1e-3, t_end=2.0, record_every=50))
    records = spreads_along(run, prob, torch.zeros(2))

    fVe0 = records[0].fV_e
    for record in records:
        assert record.fV_e <= fwd_spread_bound(fVe0, J, record.t) * (1 + 1e-8)

    assert fwd_spread_bound(2.0, 4, 0.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        fwd_spread_bound(0.0, 4, 1.0)


def test_nonmonotone_residuals(nonmon_setup) -> None:
    prob, m0, C0 = nonmon_setup
    ens = init_from_prior(m0, C0, 10, seed=7, moment_matched=True)
    times = torch.linspace(0, 1, 1000, dtype=DTYPE)
    trajectory = propagate_closed_form(ens, prob, times)

    cfg = FlowConfig.from_problem(prob, m0, C0)
    u_ref = canonical_reference(cfg, prob, ens)
    assert torch.allclose(u_ref, torch.zeros(2, dtype=DTYPE), atol=1e-10)

    records = spreads_along(trajectory, prob, u_ref, spectral=cfg.spectral)
    report = monotonicity_report(records)

    # ‖m‖ rises from about 141 before it decays
    assert records[0].mean_residual_norm == pytest.approx(200 ** 0.5 * 10, rel=1e-9)
    assert max(r.mean_residual_norm for r in records) > 150
    assert not report.monotone("mean_residual_norm")
    assert not report.monotone("V_r")
    assert report.monotone("V_e")
    assert report.monotone("fV_e")
    assert report.monotone("fV_r")
    assert report.monotone("lyapunov")


def test_scaled_fwd_residual_spread_bounded(diagonal_setup) -> None:
    prob, m0, C0 = diagonal_setup
    ens = init_from_prior(m0, C0, 10, seed=0, moment_matched=True)
    trajectory = propagate_closed_form(ens, prob, [1e4, 1e6, 1e8])

    records = spreads_along(trajectory, prob, torch.zeros(2))
    scaled = [record.t * record.fV_r for record in records]
    assert min(scaled) > 0
    assert max(scaled) / min(scaled) <= 1.01


def test_residual_spread_limit_rank_deficient() -> None:
    prob = InverseProblem(A=[[0.0, 1.0]], Gamma=[[1.0]], y=[1.0])
    C0 = torch.tensor([[2.0, 1.0], [1.0, 1.0]], dtype=DTYPE)
    ens = init_from_prior([0.0, 0.5], C0, 3, seed=1, moment_matched=True)
    m, C = empirical_moments(ens)
    cfg = FlowConfig.from_problem(prob, m, C)

    u_ref = canonical_reference(cfg, prob, ens)
    trajectory = propagate_closed_form(ens, prob, [0.0, 1e6])
    start, end = spreads_along(trajectory, prob, u_ref)

    assert start.V_r - start.V_e > 1e-3
    assert abs(end.V_r - end.V_e) <= 1e-6


def test_lyapunov_kernel_shift(get_random_problem) -> None:
    prob, m0, C0 = get_random_problem(3, m=2, seed=5, clean=True)
    cfg = FlowConfig.from_problem(prob, m0, C0)
    kernel = torch.linalg.svd(prob.A).Vh[-1]
    assert torch.linalg.norm(prob.A @ kernel).item() <= 1e-12

    means = mean_path(cfg, prob, m0, torch.linspace(0, 5, 51, dtype=DTYPE))
    xi = gamma_preimage(prob.y, prob.A, prob.Gamma)
    values = lyapunov_value(means, xi, cfg.spectral.S)
    shifted = lyapunov_value(means, xi + kernel, cfg.spectral.S)

    gap = shifted - values
    assert torch.allclose(gap, gap[0].expand_as(gap), atol=1e-9)
    for series in (values, shifted):
        assert torch.all(series[1:] - series[:-1] <= 1e-12)
