"""Fixed-step RK4 integrators used as independent oracles for closed forms.

States are tuples of tensors; leading batch dimensions are allowed, so a
batch of problems of the same size integrates in one pass.
"""

# stdlib
import logging
import math
from typing import Callable
from typing import Optional
from typing import Tuple

# third party
import torch

from ekiflow.utils import as_tensor
from ekiflow.utils import symmetrize

logger = logging.getLogger(__name__)

State = Tuple[torch.Tensor, ...]
RHS = Callable[[float, State], State]


def nr_steps(t_span: float, dt: float) -> int:
    """Number of uniform steps of size at most dt covering t_span.

    Args:
        t_span (float): Length of the interval.
        dt (float): Maximal step.

    Returns:
        int: Number of steps, 0 for an empty interval.

    Raises:
        ValueError: If dt is not positive or t_span is negative.
    """
    if dt <= 0:
        raise ValueError(f"dt should be positive, got {dt}")
    if t_span < 0:
        raise ValueError(f"Time span should be non negative, got {t_span}")
    return math.ceil(t_span / dt - 1e-9)


def rk4_step(rhs: RHS, t: float, state: State, h: float) -> State:
    """One classical Runge-Kutta step.

    Args:
        rhs (RHS): Right-hand side f(t, state).
        t (float): Current time.
        state (State): Current state.
        h (float): Step size.

    Returns:
        State: The state at t + h.
    """
    k1 = rhs(t, state)
    k2 = rhs(t + h / 2, tuple(s + h / 2 * k for s, k in zip(state, k1)))
    k3 = rhs(t + h / 2, tuple(s + h / 2 * k for s, k in zip(state, k2)))
    k4 = rhs(t + h, tuple(s + h * k for s, k in zip(state, k3)))
    return tuple(
        s + h / 6 * (a + 2 * b + 2 * c + d)
        for s, a, b, c, d in zip(state, k1, k2, k3, k4)
    )


def rk4_integrate(
    rhs: RHS,
    state: State,
    t_end: float,
    dt: float,
    t0: float = 0.0,
    callback: Optional[Callable[[int, float, State], State]] = None,
) -> State:
    """Integrate from t0 to t_end with uniform steps of size at most dt.

    Args:
        rhs (RHS): Right-hand side f(t, state).
        state (State): Initial state.
        t_end (float): Final time.
        dt (float): Maximal step.
        t0 (float): Initial time. Defaults to 0.
        callback (Optional[Callable]): Called as callback(step, t, state) after
            every step; its return value replaces the state.

    Returns:
        State: The state at t_end.
    """
    steps = nr_steps(t_end - t0, dt)
    if steps == 0:
        return state

    h = (t_end - t0) / steps
    logger.debug("RK4 integration on [%s, %s] with %d steps", t0, t_end, steps)
    for step in range(1, steps + 1):
        state = rk4_step(rhs, t0 + (step - 1) * h, state, h)
        if callback is not None:
            state = callback(step, t0 + step * h, state)

    return state


def integrate_covariance_ode(
    alpha: float, B: torch.Tensor, C0: torch.Tensor, t_end: float, dt: float = 1e-4
) -> torch.Tensor:
    """RK4 solution of Ċ = −α·C·B·C.

    Args:
        alpha (float): Flow parameter.
        B (torch.Tensor): AᵀΓ⁻¹A, shape (..., n, n).
        C0 (torch.Tensor): Initial covariance, shape (..., n, n).
        t_end (float): Final time.
        dt (float): Maximal step. Defaults to 1e-4.

    Returns:
        torch.Tensor: C(t_end).
    """
    B = as_tensor(B)

    def rhs(t: float, state: State) -> State:
        (C,) = state
        return (-alpha * C @ B @ C,)

    (C,) = rk4_integrate(rhs, (as_tensor(C0),), t_end, dt)
    return symmetrize(C)


def integrate_moment_odes(
    alpha: float,
    B: torch.Tensor,
    b: torch.Tensor,
    C0: torch.Tensor,
    x0: torch.Tensor,
    t_end: float,
    dt: float = 1e-4,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """RK4 co-integration of Ċ = −α·C·B·C and ẋ = −C·(Bx − b).

    With b = AᵀΓ⁻¹y the second equation is ẋ = −C·AᵀΓ⁻¹(Ax − y).

    Args:
        alpha (float): Flow parameter.
        B (torch.Tensor): AᵀΓ⁻¹A, shape (..., n, n).
        b (torch.Tensor): AᵀΓ⁻¹y, shape (..., n).
        C0 (torch.Tensor): Initial covariance, shape (..., n, n).
        x0 (torch.Tensor): Initial value, shape (..., n).
        t_end (float): Final time.
        dt (float): Maximal step. Defaults to 1e-4.

    Returns:
        Tuple[torch.Tensor, torch.Tensor]: C(t_end) and x(t_end).
    """
    B = as_tensor(B)
    b = as_tensor(b)

    def rhs(t: float, state: State) -> State:
        C, x = state
        residual = (x.unsqueeze(-2) @ B).squeeze(-2) - b
        return (
            -alpha * C @ B @ C,
            -(C @ residual.unsqueeze(-1)).squeeze(-1),
        )

    C, x = rk4_integrate(rhs, (as_tensor(C0), as_tensor(x0)), t_end, dt)
    return symmetrize(C), x
