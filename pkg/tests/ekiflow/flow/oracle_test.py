# stdlib
import math

# third party
import pytest
import torch

from ekiflow.flow import integrate_covariance_ode
from ekiflow.flow import integrate_moment_odes
from ekiflow.flow import rk4_integrate
from ekiflow.flow import rk4_step
from ekiflow.flow.oracle import nr_steps
from ekiflow.utils import DTYPE


@pytest.mark.parametrize(
    "t_span, dt, expected", [(1.0, 0.1, 10), (1.0, 0.3, 4), (0.0, 0.1, 0)]
)
def test_nr_steps(t_span, dt, expected) -> None:
    assert nr_steps(t_span, dt) == expected


@pytest.mark.parametrize("t_span, dt", [(1.0, 0.0), (1.0, -0.1), (-1.0, 0.1)])
def test_nr_steps_invalid(t_span, dt) -> None:
    with pytest.raises(ValueError):
        nr_steps(t_span, dt)


def test_rk4_exponential() -> None:
    def rhs(t, state):
        (x,) = state
        return (-x,)

    state = (torch.ones(3, dtype=DTYPE),)
    (x,) = rk4_integrate(rhs, state, t_end=1.0, dt=1e-2)
    expected = torch.full((3,), math.exp(-1.0), dtype=DTYPE)
    assert torch.allclose(x, expected, rtol=1e-9)


def test_rk4_step_polynomial() -> None:
    # RK4 is exact for ẋ = t³
    def rhs(t, state):
        return (torch.tensor(t ** 3, dtype=DTYPE),)

    (x,) = rk4_step(rhs, 0.0, (torch.tensor(0.0, dtype=DTYPE),), 2.0)
    assert x.item() == pytest.approx(4.0)


def test_rk4_callback() -> None:
    calls = []

    def rhs(t, state):
        return (torch.zeros_like(state[0]),)

    def callback(step, t, state):
        calls.append((step, t))
        return (state[0] + 1,)

    (x,) = rk4_integrate(rhs, (torch.zeros(1),), t_end=1.0, dt=0.25, callback=callback)
    assert x.item() == 4
    assert [step for step, _ in calls] == [1, 2, 3, 4]
    assert calls[-1][1] == pytest.approx(1.0)


def test_integrate_covariance_scalar() -> None:
    # ċ = −α·b·c² has c(t) = c0/(1 + α·b·c0·t)
    B = torch.tensor([[2.0]], dtype=DTYPE)
    C0 = torch.tensor([[3.0]], dtype=DTYPE)
    C = integrate_covariance_ode(2.0, B, C0, t_end=1.0, dt=1e-3)
    assert C.item() == pytest.approx(3.0 / 13.0, rel=1e-7)


def test_integrate_moment_odes_scalar() -> None:
    # α = 1, B = 1, C0 = 1: c(t) = 1/(1 + t) and x(t) = (x0 + b·t)/(1 + t)
    B = torch.eye(1, dtype=DTYPE)
    b = torch.tensor([2.0], dtype=DTYPE)
    C, x = integrate_moment_odes(1.0, B, b, torch.eye(1), torch.tensor([1.0]), 3.0)
    assert C.item() == pytest.approx(0.25, rel=1e-9)
    assert x.item() == pytest.approx(7.0 / 4.0, rel=1e-9)
