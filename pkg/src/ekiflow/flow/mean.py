"""Closed-form mean flow ẋ = −C(t)·AᵀΓ⁻¹(Ax − y), its limits and rates.

Every quantity driven by the covariance flow obeys this equation and only
differs in its initial value: the mean, each particle, the residuals.
In the eigenbasis of C₀B, with b = S⁻¹C₀AᵀΓ⁻¹y, mode i evolves as
    zᵢ(t) = (1 + αtμᵢ)^{−1/α}·zᵢ(0) + gᵢ(t)·bᵢ,
    gᵢ(t) = (1 − (1 + αtμᵢ)^{−1/α})/μᵢ  (gᵢ(t) = t when μᵢ = 0).
"""

# stdlib
import math
from typing import Any
from typing import Optional
from typing import Tuple

# third party
import torch

from ekiflow.config import Config
from ekiflow.linalg import gamma_preimage
from ekiflow.linalg import gamma_projection
from ekiflow.linalg import precond_cov_power
from ekiflow.linalg import pseudo_inverse_gamma
from ekiflow.problem import InverseProblem
from ekiflow.utils import as_tensor
from ekiflow.utils import check_square

from .covariance import FlowConfig


class MeanSolution:
    """Value x(t) of the mean equation started at x0.

    Attributes:
        t (float): Time.
        x (torch.Tensor): Value at t.
        x0 (torch.Tensor): Initial condition.
    """

    __slots__ = {"t", "x", "x0"}

    def __init__(self, t: float, x: torch.Tensor, x0: torch.Tensor) -> None:
        """Initializer for the MeanSolution.

        Args:
            t (float): Time.
            x (torch.Tensor): Value at t.
            x0 (torch.Tensor): Initial condition.
        """
        self.t = t
        self.x = x
        self.x0 = x0


class AsymptoticLimit:
    """Limit x∞ = x† + noise shift of the mean equation.

    Attributes:
        x_dagger (torch.Tensor): Noise-free limit.
        noise_shift (torch.Tensor): (AᵀΓ⁻¹A)⁻AᵀΓ⁻¹ε.
        x_infinity (torch.Tensor): x_dagger + noise_shift.
    """

    __slots__ = {"x_dagger", "noise_shift", "x_infinity"}

    def __init__(self, x_dagger: torch.Tensor, noise_shift: torch.Tensor) -> None:
        """Initializer for the AsymptoticLimit.

        Args:
            x_dagger (torch.Tensor): Noise-free limit.
            noise_shift (torch.Tensor): Shift caused by the noise.
        """
        self.x_dagger = x_dagger
        self.noise_shift = noise_shift
        self.x_infinity = x_dagger + noise_shift


def _mode_factors(
    cfg: FlowConfig, times: torch.Tensor
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Decay (1 + αtμ)^{−1/α} and source weight g(t) per mode.

    Args:
        cfg (FlowConfig): Flow configuration.
        times (torch.Tensor): Times, any shape.

    Returns:
        Tuple[torch.Tensor, torch.Tensor]: Both of shape times.shape + (n,).
    """
    mu = cfg.spectral.mu
    t = times.unsqueeze(-1)
    log_growth = torch.log1p(cfg.alpha * t * mu) / cfg.alpha
    decay = torch.exp(-log_growth)
    positive = mu > 0
    safe_mu = torch.where(positive, mu, torch.ones_like(mu))
    g = torch.where(positive, -torch.expm1(-log_growth) / safe_mu, t.expand_as(decay))
    return decay, g


def _source(cfg: FlowConfig, data_term: torch.Tensor) -> torch.Tensor:
    return cfg.spectral.S_inv @ (cfg.C0 @ data_term)


def _check_time(t: float) -> None:
    if t < 0:
        raise ValueError(f"t should be non negative, got {t}")


def mean_at(cfg: FlowConfig, prob: InverseProblem, x0: Any, t: float) -> torch.Tensor:
    """Closed-form solution of ẋ = −C(t)·AᵀΓ⁻¹(Ax − y), x(0) = x0.

    x(t) = (C(t)C₀⁻¹)^{1/α}·x0 + S·diag(gᵢ(t))·S⁻¹·C₀AᵀΓ⁻¹y.

    Args:
        cfg (FlowConfig): Flow configuration.
        prob (InverseProblem): The problem.
        x0 (Any): Initial value.
        t (float): Nonnegative time.

    Returns:
        torch.Tensor: x(t).

    Raises:
        ValueError: If t is negative.
    """
    _check_time(t)
    x0 = as_tensor(x0).reshape(-1)
    decay, g = _mode_factors(cfg, torch.tensor(float(t), dtype=x0.dtype))
    z = decay * (cfg.spectral.S_inv @ x0) + g * _source(cfg, prob.data_term)
    return cfg.spectral.S @ z


def mean_path(
    cfg: FlowConfig, prob: InverseProblem, x0: Any, times: Any
) -> torch.Tensor:
    """Closed-form solution on a grid of times, for one or several initial values.

    Args:
        cfg (FlowConfig): Flow configuration.
        prob (InverseProblem): The problem.
        x0 (Any): Initial value (n) or J initial values (J×n).
        times (Any): K nonnegative times.

    Returns:
        torch.Tensor: K×n tensor, or K×J×n for J initial values.

    Raises:
        ValueError: If a time is negative.
    """
    times = as_tensor(times).reshape(-1)
    if times.numel() and times.min() < 0:
        raise ValueError("times should be non negative")
    x0 = as_tensor(x0)
    decay, g = _mode_factors(cfg, times)
    source = g * _source(cfg, prob.data_term)
    z0 = x0 @ cfg.spectral.S_inv.T
    if x0.dim() == 2:
        decay = decay.unsqueeze(1)
        source = source.unsqueeze(1)
    return (decay * z0 + source) @ cfg.spectral.S.T


def mean_solution(
    cfg: FlowConfig, prob: InverseProblem, x0: Any, t: float
) -> MeanSolution:
    """mean_at wrapped with its time and initial condition.

    Args:
        cfg (FlowConfig): Flow configuration.
        prob (InverseProblem): The problem.
        x0 (Any): Initial value.
        t (float): Nonnegative time.

    Returns:
        MeanSolution: The solution record.
    """
    x0 = as_tensor(x0).reshape(-1)
    x = x0.clone() if t == 0 else mean_at(cfg, prob, x0, t)
    return MeanSolution(t=t, x=x, x0=x0)


def solution_with_truth(
    cfg: FlowConfig, prob: InverseProblem, x0: Any, t: float
) -> torch.Tensor:
    """Split form x(t) = x0 + (E − P)(u† − x0) + S·diag(gᵢ)·S⁻¹·C₀AᵀΓ⁻¹ε.

    Here P = (C(t)C₀⁻¹)^{1/α} and y = Au† + ε.

    Args:
        cfg (FlowConfig): Flow configuration.
        prob (InverseProblem): Problem with u_truth and eps set.
        x0 (Any): Initial value.
        t (float): Nonnegative time.

    Returns:
        torch.Tensor: x(t).

    Raises:
        ValueError: If u_truth or eps is missing, or t is negative.
    """
    if prob.u_truth is None or prob.eps is None:
        raise ValueError("solution_with_truth needs both u_truth and eps")
    _check_time(t)

    x0 = as_tensor(x0).reshape(-1)
    P = precond_cov_power(cfg.spectral, t, cfg.alpha, 1 / cfg.alpha)
    _, g = _mode_factors(cfg, torch.tensor(float(t), dtype=x0.dtype))
    noise = cfg.spectral.S @ (g * _source(cfg, prob.A.T @ prob.gamma_inv(prob.eps)))

    shift = prob.u_truth - x0
    return x0 + shift - P @ shift + noise


def minimal_norm_solution(
    C0: Any,
    x0: Any,
    A: Any,
    Gamma: Any,
    y_target: Any,
    tol: float = 1e-8,
) -> torch.Tensor:
    """Solve min ½‖x − x0‖²_{C₀} subject to Ax = y_target via its KKT system.

    The target is first Γ-projected onto ran(A).

    Args:
        C0 (Any): SPD weight.
        x0 (Any): Anchor point.
        A (Any): Forward operator.
        Gamma (Any): Noise covariance.
        y_target (Any): Constraint right-hand side.
        tol (float): Relative feasibility tolerance.

    Returns:
        torch.Tensor: The constrained minimizer.

    Raises:
        ValueError: If y_target is not in the range of A.
    """
    C0 = as_tensor(C0)
    x0 = as_tensor(x0).reshape(-1)
    A = as_tensor(A)
    y_target = as_tensor(y_target).reshape(-1)
    n = check_square(C0, "C0")
    m = A.shape[0]

    projected = gamma_projection(y_target, A, Gamma)
    scale = 1 + torch.linalg.norm(y_target).item()
    if torch.linalg.norm(y_target - projected).item() > tol * scale:
        raise ValueError(
            "y_target is not in the range of A, the constraint is infeasible"
        )

    chol, info = torch.linalg.cholesky_ex(C0)
    if info.item() != 0:
        raise ValueError("C0 should be symmetric positive definite")

    kkt = torch.zeros(n + m, n + m, dtype=C0.dtype)
    kkt[:n, :n] = torch.cholesky_inverse(chol)
    kkt[:n, n:] = A.T
    kkt[n:, :n] = A
    rhs = torch.cat([torch.zeros(n, dtype=C0.dtype), projected - A @ x0])

    # singular for linearly dependent rows of A; the system stays consistent
    solution = torch.linalg.pinv(kkt) @ rhs
    return x0 + solution[:n]


def asymptotic_limit(
    cfg: FlowConfig, prob: InverseProblem, x0: Any
) -> AsymptoticLimit:
    """Limit of x(t) as t → ∞.

    With a ground truth: x† = x0 + (E − C∞C₀⁻¹)(u† − x0) and the noise shift
    (AᵀΓ⁻¹A)⁻AᵀΓ⁻¹ε, where ε = y − Au† if not given. Without one, x∞ is the
    C₀-closest point to x0 that reproduces the Γ-projection of y.

    Args:
        cfg (FlowConfig): Flow configuration.
        prob (InverseProblem): The problem.
        x0 (Any): Initial value.

    Returns:
        AsymptoticLimit: The limit.
    """
    x0 = as_tensor(x0).reshape(-1)

    if prob.u_truth is None:
        target = gamma_projection(prob.y, prob.A, prob.Gamma)
        x_inf = minimal_norm_solution(cfg.C0, x0, prob.A, prob.Gamma, target)
        return AsymptoticLimit(x_dagger=x_inf, noise_shift=torch.zeros_like(x_inf))

    eps = prob.eps if prob.eps is not None else prob.y - prob.A @ prob.u_truth
    e_inf = torch.ones_like(cfg.spectral.mu)
    e_inf[: cfg.spectral.rank_k] = 0
    limit_projector = cfg.spectral.assemble(e_inf)

    shift = prob.u_truth - x0
    x_dagger = x0 + shift - limit_projector @ shift
    noise_shift = pseudo_inverse_gamma(cfg.spectral, cfg.C0) @ (
        prob.A.T @ prob.gamma_inv(eps)
    )
    return AsymptoticLimit(x_dagger=x_dagger, noise_shift=noise_shift)


def _check_clean(prob: InverseProblem, tol: float = 1e-10) -> torch.Tensor:
    if prob.eps is not None and torch.linalg.norm(prob.eps).item() > 0:
        raise ValueError("Rate certificates need noise-free data (eps = 0)")

    xi = gamma_preimage(prob.y, prob.A, prob.Gamma)
    scale = 1 + torch.linalg.norm(prob.y).item()
    if torch.linalg.norm(prob.A @ xi - prob.y).item() > tol * scale:
        raise ValueError("Rate certificates need data in the range of A")
    return xi


def rate_errors(
    cfg: FlowConfig, prob: InverseProblem, x0: Any, t: float
) -> Tuple[float, float]:
    """Actual errors (‖x(t) − x†‖, ‖Ax(t) − y‖_Γ) of the closed-form solution.

    Args:
        cfg (FlowConfig): Flow configuration.
        prob (InverseProblem): Noise-free problem.
        x0 (Any): Initial value.
        t (float): Time.

    Returns:
        Tuple[float, float]: Parameter and observation errors.
    """
    x = mean_at(cfg, prob, x0, t)
    x_dagger = asymptotic_limit(cfg, prob, x0).x_infinity
    param = torch.linalg.norm(x - x_dagger).item()
    obs = prob.misfit_norm(prob.A @ x - prob.y).item()
    return param, obs


def rate_certificates(
    cfg: FlowConfig, prob: InverseProblem, x0: Any, t: float
) -> Tuple[float, float]:
    """Explicit convergence bounds for noise-free data y = Aξ.

    With z = S⁻¹(x0 − ξ) the error is x(t) − x† = S·w, wᵢ = (1 + αtμᵢ)^{−1/α}zᵢ
    for i < k and 0 otherwise. Using (1 + αtμ)^{−1/α} ≤ (αtμ)^{−1/α}:

        ‖x(t) − x†‖ ≤ K₁·(1/(μ_k t))^{1/α},  K₁ = α^{−1/α}·‖S‖₂·‖z_{<k}‖,

    and since SᵀC₀⁻¹S = diag(gᵢ), ‖Ax(t) − y‖²_Γ = Σ_{i<k} gᵢμᵢ(1 + αtμᵢ)^{−2/α}zᵢ²,

        ‖Ax(t) − y‖_Γ ≤ K₂·(μ₁/t)^{1/α},
        K₂ = α^{−1/α}·μ₁^{−1/α}·(Σ_{i<k} gᵢμᵢ^{1−2/α}zᵢ²)^{1/2}.

    Args:
        cfg (FlowConfig): Flow configuration.
        prob (InverseProblem): Noise-free problem.
        x0 (Any): Initial value.
        t (float): Nonnegative time.

    Returns:
        Tuple[float, float]: (bound_param, bound_obs); infinite at t = 0.

    Raises:
        ValueError: If the data is noisy or t is negative.
    """
    _check_time(t)
    xi = _check_clean(prob)
    spectral = cfg.spectral
    k = spectral.rank_k
    if k == 0:
        return 0.0, 0.0
    if t == 0:
        return math.inf, math.inf

    alpha = cfg.alpha
    x0 = as_tensor(x0).reshape(-1)
    z = (spectral.S_inv @ (x0 - xi))[:k]
    mu = spectral.mu[:k]

    k1 = alpha ** (-1 / alpha) * torch.linalg.matrix_norm(spectral.S, ord=2).item()
    k1 *= torch.linalg.norm(z).item()
    bound_param = k1 * (1 / (mu[-1].item() * t)) ** (1 / alpha)

    gram = torch.diagonal(spectral.S.T @ torch.linalg.solve(cfg.C0, spectral.S))[:k]
    weighted = torch.sum(gram * mu ** (1 - 2 / alpha) * z ** 2).item()
    mu1 = mu[0].item()
    k2 = alpha ** (-1 / alpha) * mu1 ** (-1 / alpha) * math.sqrt(max(weighted, 0.0))
    bound_obs = k2 * (mu1 / t) ** (1 / alpha)

    return bound_param, bound_obs


def map_estimator(
    C0: Any, m0: Any, A: Any, Gamma: Any, y: Any, t: float
) -> torch.Tensor:
    """MAP estimate with data weight t.

    u_MAP(t) = m0 + t·C₀(E + t·AᵀΓ⁻¹A·C₀)⁻¹·AᵀΓ⁻¹(y − Am0), the minimizer of
    (t/2)‖Au − y‖²_Γ + ½‖u − m0‖²_{C₀}.

    Args:
        C0 (Any): Prior covariance.
        m0 (Any): Prior mean.
        A (Any): Forward operator.
        Gamma (Any): Noise covariance.
        y (Any): Datum.
        t (float): Nonnegative data weight.

    Returns:
        torch.Tensor: u_MAP(t).

    Raises:
        ValueError: If t is negative.
    """
    _check_time(t)
    prob = InverseProblem(A=A, Gamma=Gamma, y=y)
    C0 = as_tensor(C0)
    m0 = as_tensor(m0).reshape(-1)

    eye = torch.eye(C0.shape[0], dtype=C0.dtype)
    innovation = prob.A.T @ prob.gamma_inv(prob.y - prob.A @ m0)
    return m0 + t * C0 @ torch.linalg.solve(eye + t * prob.B @ C0, innovation)


def map_gradient(
    C0: Any, m0: Any, A: Any, Gamma: Any, y: Any, t: float, u: Any
) -> torch.Tensor:
    """Gradient t·AᵀΓ⁻¹(Au − y) + C₀⁻¹(u − m0) of the MAP objective.

    Args:
        C0 (Any): Prior covariance.
        m0 (Any): Prior mean.
        A (Any): Forward operator.
        Gamma (Any): Noise covariance.
        y (Any): Datum.
        t (float): Data weight.
        u (Any): Evaluation point.

    Returns:
        torch.Tensor: The gradient.
    """
    prob = InverseProblem(A=A, Gamma=Gamma, y=y)
    u = as_tensor(u).reshape(-1)
    data = prob.A.T @ prob.gamma_inv(prob.A @ u - prob.y)
    prior = torch.linalg.solve(as_tensor(C0), u - as_tensor(m0).reshape(-1))
    return t * data + prior


def strip_orthogonal_data(
    prob: InverseProblem, config: Optional[Config] = None
) -> InverseProblem:
    """Replace y by its Γ-projection onto ran(A).

    The flow only sees AᵀΓ⁻¹y, which does not change.

    Args:
        prob (InverseProblem): The problem.
        config (Optional[Config]): Tolerances.

    Returns:
        InverseProblem: Problem with y in the range of A.
    """
    projected = gamma_projection(prob.y, prob.A, prob.Gamma)
    eps = None
    if prob.u_truth is not None and prob.eps is not None:
        eps = projected - prob.A @ prob.u_truth
    return InverseProblem(
        A=prob.A,
        Gamma=prob.Gamma,
        y=projected,
        u_truth=prob.u_truth,
        eps=eps,
        config=config,
    )
