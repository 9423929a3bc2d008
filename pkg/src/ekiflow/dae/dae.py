"""Eigenvalue/eigenvector dynamics of the covariance flow.

For Ċ = −α·C·B·C with eigenpairs C(t)vᵢ = λᵢvᵢ:

    λ̇ᵢ = −α·λᵢ²·‖Avᵢ‖²_Γ,
    v̇ᵢ = Σ_{j≠i} α·λᵢλⱼ/(λⱼ − λᵢ)·⟨Avᵢ, Avⱼ⟩_Γ·vⱼ,

with degenerate pairs excluded from the sum; on a degenerate eigenspace the
basis is chosen so that ⟨Avᵢ, Avⱼ⟩_Γ = 0.
"""

# stdlib
import logging
from typing import Any
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

# third party
import torch

from ekiflow.config import Config
from ekiflow.flow import FlowConfig
from ekiflow.flow.oracle import nr_steps
from ekiflow.flow.oracle import rk4_step
from ekiflow.utils import as_tensor
from ekiflow.utils import symmetrize

from .eigen_state import CrossingEvent
from .eigen_state import DaeResult
from .eigen_state import EigenState

logger = logging.getLogger(__name__)


def _whitened_operator(A: Any, Gamma: Any) -> torch.Tensor:
    """Γ^{−1/2}A in the Cholesky sense, so ⟨Ax, Ay⟩_Γ = ⟨Wx, Wy⟩."""
    A = as_tensor(A)
    chol = torch.linalg.cholesky(as_tensor(Gamma))
    return torch.linalg.solve_triangular(chol, A, upper=False)


def _derivatives(
    lambdas: torch.Tensor,
    vectors: torch.Tensor,
    W: torch.Tensor,
    alpha: float,
    tol_degenerate: float,
) -> Tuple[torch.Tensor, torch.Tensor]:
    AV = W @ vectors
    gram = AV.T @ AV

    lambda_dot = -alpha * lambdas ** 2 * torch.diagonal(gram)

    # gaps[i, j] = λⱼ − λᵢ
    gaps = lambdas.unsqueeze(0) - lambdas.unsqueeze(1)
    coupled = gaps.abs() > tol_degenerate
    safe_gaps = torch.where(coupled, gaps, torch.ones_like(gaps))
    coeff = alpha * torch.outer(lambdas, lambdas) * gram / safe_gaps
    coeff = torch.where(coupled, coeff, torch.zeros_like(coeff))

    return lambda_dot, vectors @ coeff.T


def dae_rhs(
    state: EigenState,
    A: Any,
    Gamma: Any,
    alpha: float,
    tol_degenerate: Optional[float] = None,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Right-hand side (λ̇, V̇) of the eigenpair system.

    Args:
        state (EigenState): Current eigenpairs.
        A (Any): Forward operator.
        Gamma (Any): Noise covariance.
        alpha (float): Flow parameter.
        tol_degenerate (Optional[float]): Absolute gap below which a pair is not
            coupled. Defaults to Config().tol_degenerate·max λ.

    Returns:
        Tuple[torch.Tensor, torch.Tensor]: λ̇ (vector) and V̇ (matrix).
    """
    if tol_degenerate is None:
        tol_degenerate = Config().tol_degenerate * state.lambdas.abs().max().item()
    W = _whitened_operator(A, Gamma)
    return _derivatives(state.lambdas, state.vectors, W, alpha, tol_degenerate)


def _gram_schmidt(vectors: torch.Tensor) -> torch.Tensor:
    """Modified Gram-Schmidt on the columns."""
    basis = vectors.clone()
    n = basis.shape[1]
    for i in range(n):
        for j in range(i):
            basis[:, i] -= (basis[:, j] @ basis[:, i]) * basis[:, j]
        basis[:, i] /= torch.linalg.norm(basis[:, i])
    return basis


def _degenerate_groups(lambdas: torch.Tensor, tol: float) -> List[List[int]]:
    groups = [[0]]
    for i in range(1, lambdas.shape[0]):
        if abs(lambdas[groups[-1][-1]].item() - lambdas[i].item()) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [group for group in groups if len(group) > 1]


def initial_state(
    C0: Any, W: torch.Tensor, tol_degenerate: float
) -> EigenState:
    """Eigendecomposition of C₀, descending, with A-orthogonal degenerate bases.

    Args:
        C0 (Any): Initial covariance.
        W (torch.Tensor): Whitened forward operator Γ^{−1/2}A.
        tol_degenerate (float): Absolute degeneracy gap.

    Returns:
        EigenState: State at t = 0.
    """
    evals, evecs = torch.linalg.eigh(symmetrize(as_tensor(C0)))
    lambdas = evals.flip(0)
    vectors = evecs.flip(1)

    for group in _degenerate_groups(lambdas, tol_degenerate):
        block = vectors[:, group]
        AV = W @ block
        _, rotation = torch.linalg.eigh(symmetrize(AV.T @ AV))
        vectors[:, group] = block @ rotation

    return EigenState(lambdas=lambdas, vectors=vectors, t=0.0)


def _rematch(
    lambdas: torch.Tensor, vectors: torch.Tensor
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Re-synchronize with the eigendecomposition, assigning by maximal overlap."""
    evals, evecs = torch.linalg.eigh(symmetrize((vectors * lambdas) @ vectors.T))
    overlap = (vectors.T @ evecs).abs()

    n = lambdas.shape[0]
    new_lambdas = torch.empty_like(lambdas)
    new_vectors = torch.empty_like(vectors)
    for _ in range(n):
        flat = torch.argmax(overlap).item()
        i, j = divmod(flat, n)
        sign = torch.sign(vectors[:, i] @ evecs[:, j])
        new_lambdas[i] = evals[j]
        new_vectors[:, i] = evecs[:, j] * (sign if sign != 0 else 1.0)
        overlap[i, :] = -1.0
        overlap[:, j] = -1.0

    return new_lambdas, new_vectors


def _crossed_pairs(
    before: torch.Tensor, after: torch.Tensor, tol: float
) -> List[Tuple[int, int]]:
    diff_before = before.unsqueeze(1) - before.unsqueeze(0)
    diff_after = after.unsqueeze(1) - after.unsqueeze(0)
    swapped = diff_before * diff_after < 0
    merged = (diff_after.abs() <= tol) & (diff_before.abs() > tol)
    flagged = torch.triu(swapped | merged, diagonal=1)
    return [(int(i), int(j)) for i, j in flagged.nonzero().tolist()]


def integrate_dae(
    cfg: FlowConfig,
    A: Any,
    Gamma: Any,
    t_end: float,
    dt: float,
    output_times: Optional[Sequence[float]] = None,
    config: Optional[Config] = None,
) -> DaeResult:
    """RK4 integration of the eigenpair system from the eigendecomposition of C₀.

    V is re-orthonormalized (modified Gram-Schmidt) after every step. Pairs keep
    their trajectory identity; when two eigenvalues meet, a crossing event is
    recorded and the pairs are re-matched to the eigendecomposition of
    V·diag(λ)·Vᵀ by maximal overlap.

    Args:
        cfg (FlowConfig): Flow configuration (α and C₀).
        A (Any): Forward operator.
        Gamma (Any): Noise covariance.
        t_end (float): Final time.
        dt (float): Maximal step.
        output_times (Optional[Sequence[float]]): Times at which states are
            recorded, rounded to the step grid. Defaults to every step.
        config (Optional[Config]): Tolerances.

    Returns:
        DaeResult: States at t = 0 and at the output times, plus crossings.
    """
    config = config or Config()
    W = _whitened_operator(A, Gamma)
    alpha = cfg.alpha

    lambda_max = torch.linalg.eigvalsh(symmetrize(cfg.C0))[-1].item()
    tol = config.tol_degenerate * lambda_max
    state = initial_state(cfg.C0, W, tol)

    steps = nr_steps(t_end, dt)
    h = t_end / steps if steps else 0.0
    if output_times is None:
        record = set(range(1, steps + 1))
    else:
        record = {int(round(t / h)) if h else 0 for t in output_times}

    states = [state]
    crossings: List[CrossingEvent] = []

    def rhs(t: float, current):
        lambdas, vectors = current
        return _derivatives(lambdas, vectors, W, alpha, tol)

    lambdas, vectors = state.lambdas, state.vectors
    logger.debug("DAE integration on [0, %s] with %d steps", t_end, steps)
    for step in range(1, steps + 1):
        t = step * h
        new_lambdas, new_vectors = rk4_step(rhs, t - h, (lambdas, vectors), h)
        new_vectors = _gram_schmidt(new_vectors)

        pairs = _crossed_pairs(lambdas, new_lambdas, tol)
        if pairs:
            for i, j in pairs:
                logger.warning("Eigenvalue crossing of pair (%d, %d) at t=%s", i, j, t)
                crossings.append(CrossingEvent(t=t, i=i, j=j))
            new_lambdas, new_vectors = _rematch(new_lambdas, new_vectors)

        lambdas, vectors = new_lambdas, new_vectors
        if step in record:
            states.append(EigenState(lambdas=lambdas, vectors=vectors, t=t))

    return DaeResult(states=states, crossings=crossings)


def eigenvalue_bounds(
    state0: EigenState, A: Any, Gamma: Any, alpha: float, t: float
) -> Tuple[torch.Tensor, float, float]:
    """Riccati comparison bounds for the eigenvalues of C(t).

    Returns, with W = Γ^{−1/2}A and the initial pairs sorted descending,
        λᵢ(t) ≥ λᵢ(0)/(α‖W‖²tλᵢ(0) + 1)           for every i,
        λ₁(t) ≥ λ₁(0)/(α‖Av₁(0)‖²_Γ tλ₁(0) + 1),
        λₙ(t) ≤ λₙ(0)/(α‖Avₙ(0)‖²_Γ tλₙ(0) + 1).

    Args:
        state0 (EigenState): Eigenpairs of C₀.
        A (Any): Forward operator.
        Gamma (Any): Noise covariance.
        alpha (float): Flow parameter.
        t (float): Nonnegative time.

    Returns:
        Tuple[torch.Tensor, float, float]: (lower bounds, λ₁ lower bound,
        λₙ upper bound).

    Raises:
        ValueError: If t is negative.
    """
    if t < 0:
        raise ValueError(f"t should be non negative, got {t}")

    state0 = state0.sorted()
    W = _whitened_operator(A, Gamma)
    lambdas = state0.lambdas

    op_norm_sq = torch.linalg.matrix_norm(W, ord=2).item() ** 2
    lower = lambdas / (alpha * op_norm_sq * t * lambdas + 1)

    first_sq = torch.linalg.norm(W @ state0.vectors[:, 0]).item() ** 2
    last_sq = torch.linalg.norm(W @ state0.vectors[:, -1]).item() ** 2
    first, last = lambdas[0].item(), lambdas[-1].item()
    lambda1_lower = first / (alpha * first_sq * t * first + 1)
    lambdan_upper = last / (alpha * last_sq * t * last + 1)

    return lower, lambda1_lower, lambdan_upper


def convexity_check(lambda1_trajectory: Any, tol: float = 1e-8) -> bool:
    """Check discrete convexity of λ₁ sampled on a uniform grid.

    Args:
        lambda1_trajectory (Any): Samples of λ₁(t).
        tol (float): Relative tolerance on second differences.

    Returns:
        bool: True if every second difference is ≥ −tol·max|λ₁|.

    Raises:
        ValueError: If fewer than 3 samples are given.
    """
    values = as_tensor(lambda1_trajectory).reshape(-1)
    if values.shape[0] < 3:
        raise ValueError("Convexity needs at least 3 samples")

    second = values[2:] - 2 * values[1:-1] + values[:-2]
    return bool((second >= -tol * values.abs().max()).all())


def compare_with_covariance(
    state: EigenState, C: Any, separation: float = 1e-3
) -> Tuple[float, float]:
    """Distance of integrated eigenpairs to the eigendecomposition of C.

    Args:
        state (EigenState): Integrated eigenpairs.
        C (Any): Reference covariance.
        separation (float): Relative gap (to the largest eigenvalue) above which
            an eigenvalue is well separated and its vector is compared.

    Returns:
        Tuple[float, float]: Largest eigenvalue error and largest principal
        angle over well-separated eigenvectors.
    """
    evals, evecs = torch.linalg.eigh(symmetrize(as_tensor(C)))
    evals = evals.flip(0)
    evecs = evecs.flip(1)
    current = state.sorted()

    value_error = (current.lambdas - evals).abs().max().item()

    n = evals.shape[0]
    scale = max(evals.abs().max().item(), 1e-300)
    angle = 0.0
    for i in range(n):
        neighbours = [abs(evals[i] - evals[j]).item() for j in range(n) if j != i]
        if neighbours and min(neighbours) <= separation * scale:
            continue
        v = current.vectors[:, i]
        w = evecs[:, i]
        residual = torch.linalg.norm(w - (v @ w) * v).clamp(max=1.0)
        angle = max(angle, torch.asin(residual).item())

    return value_error, angle
