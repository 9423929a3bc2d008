"""Continuous-time particle dynamics

    duʲ = −C(u)·AᵀΓ⁻¹(Auʲ − y)·dt + C(u)·AᵀΓ⁻¹·√Σ·dWʲ,

where C(u) is the empirical covariance of the ensemble.
"""

# stdlib
import logging
from typing import Any
from typing import Iterator
from typing import List
from typing import Optional
from typing import Tuple

# third party
import torch

from ekiflow.config import Config
from ekiflow.flow import ALPHA_DETERMINISTIC
from ekiflow.flow import FlowConfig
from ekiflow.flow import mean_path
from ekiflow.flow.oracle import nr_steps
from ekiflow.flow.oracle import rk4_step
from ekiflow.linalg import spd_sqrt
from ekiflow.problem import InverseProblem
from ekiflow.utils import as_tensor
from ekiflow.utils import generate_standard_normal
from ekiflow.utils import get_new_generator
from ekiflow.utils import parallel_execution
from ekiflow.utils import split_seeds

from .ensemble import Ensemble
from .ensemble import EnsembleTrajectory
from .ensemble import _moments
from .ensemble import empirical_moments
from .ensemble import init_from_prior
from .sim_config import Scheme
from .sim_config import SigmaMode
from .sim_config import SimConfig

logger = logging.getLogger(__name__)

NOISE_CHUNK = 64


def _drift(U: torch.Tensor, B: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Rows −(Buʲ − b)ᵀC, i.e. −C·AᵀΓ⁻¹(Auʲ − y) for every particle."""
    _, C = _moments(U)
    return -(U @ B - b) @ C


class _WienerSource:
    """Standard normal increments with one generator per particle.

    Particle j always reads the stream seeded by the j-th child of the root
    seed, in blocks of NOISE_CHUNK steps, so its noise does not depend on J.
    """

    def __init__(self, seed: int, J: int, m: int) -> None:
        self.generators = [get_new_generator(child) for child in split_seeds(seed, J)]
        self.m = m
        self._block = torch.empty(0)
        self._pos = NOISE_CHUNK

    def draw(self) -> torch.Tensor:
        """Next J×m block of N(0, 1) samples, row j for particle j."""
        if self._pos == NOISE_CHUNK:
            self._block = torch.stack(
                [
                    generate_standard_normal(generator, (NOISE_CHUNK, self.m))
                    for generator in self.generators
                ]
            )
            self._pos = 0
        sample = self._block[:, self._pos]
        self._pos += 1
        return sample


def _wiener_increments(source: _WienerSource, h: float) -> Iterator[torch.Tensor]:
    while True:
        yield source.draw() * h ** 0.5


def _bridged_increments(
    source: _WienerSource, bridge: _WienerSource, h: float
) -> Iterator[torch.Tensor]:
    """Half-step increments whose pairwise sums are the increments of step h."""
    while True:
        coarse = source.draw() * h ** 0.5
        split = bridge.draw() * (h / 4) ** 0.5
        yield coarse / 2 + split
        yield coarse / 2 - split


def _sources(seed: int, J: int, m: int) -> Tuple[_WienerSource, _WienerSource]:
    wiener_seed, bridge_seed = split_seeds(seed, 2)
    return _WienerSource(wiener_seed, J, m), _WienerSource(bridge_seed, J, m)


def _step_size(sim: SimConfig) -> float:
    steps = nr_steps(sim.t_end, sim.dt)
    return sim.t_end / steps if steps else 0.0


def _noise_map(prob: InverseProblem, sim: SimConfig) -> torch.Tensor:
    # √Σ maps dW to observation noise: C·AᵀΓ⁻¹·√Σ·dW, √Σ = √s·Γ^{1/2}
    return sim.sigma_scale ** 0.5 * spd_sqrt(prob.Gamma) @ prob.gamma_inv(prob.A)


def _run(
    ens: Ensemble,
    prob: InverseProblem,
    sim: SimConfig,
    noise_map: Optional[torch.Tensor] = None,
    increments: Optional[Iterator[torch.Tensor]] = None,
    refine: int = 1,
) -> EnsembleTrajectory:
    B = prob.B
    b = prob.data_term
    steps = refine * nr_steps(sim.t_end, sim.dt)
    record_every = refine * sim.record_every
    h = _step_size(sim) / refine

    def rhs(t: float, state):
        (U,) = state
        return (_drift(U, B, b),)

    U = ens.particles.clone()
    times = [0.0]
    records = [U]

    logger.debug("Particle run %s with J=%d and %d steps", sim, ens.J, steps)
    for step in range(1, steps + 1):
        if sim.scheme is Scheme.RK4:
            (U,) = rk4_step(rhs, (step - 1) * h, (U,), h)
        else:
            increment = h * _drift(U, B, b)
            if noise_map is not None and increments is not None:
                _, C = _moments(U)
                increment = increment + next(increments) @ noise_map @ C
            U = U + increment

        if step % record_every == 0 or step == steps:
            times.append(step * h)
            records.append(U)

    return EnsembleTrajectory(
        times=times,
        particles=torch.stack(records),
        rng_seed=ens.rng_seed,
        rng_stream=ens.rng_stream,
    )


def run_deterministic(
    ens: Ensemble, prob: InverseProblem, sim: SimConfig
) -> EnsembleTrajectory:
    """Integrate u̇ʲ = −C(u)·AᵀΓ⁻¹(Auʲ − y), recomputing C at every stage.

    Args:
        ens (Ensemble): Initial ensemble.
        prob (InverseProblem): The problem.
        sim (SimConfig): Deterministic simulation settings.

    Returns:
        EnsembleTrajectory: Recorded ensembles, including t = 0.

    Raises:
        ValueError: If sim is not deterministic.
    """
    if sim.sigma_mode is not SigmaMode.DETERMINISTIC:
        raise ValueError("run_deterministic needs a deterministic SimConfig")
    return _run(ens, prob, sim)


def run_stochastic(
    ens: Ensemble, prob: InverseProblem, sim: SimConfig, seed: int
) -> EnsembleTrajectory:
    """Euler-Maruyama integration of the stochastic particle dynamics, Σ = s·Γ.

    Particle j draws its increments from its own generator, seeded by the
    j-th child of seed, so its noise path is the same for every ensemble
    size.

    Args:
        ens (Ensemble): Initial ensemble.
        prob (InverseProblem): The problem.
        sim (SimConfig): Stochastic simulation settings.
        seed (int): Seed of the Wiener increments.

    Returns:
        EnsembleTrajectory: Recorded ensembles, including t = 0.

    Raises:
        ValueError: If sim is not stochastic.
    """
    if sim.sigma_mode is not SigmaMode.STOCHASTIC:
        raise ValueError("run_stochastic needs a stochastic SimConfig")

    source, _ = _sources(seed, ens.J, prob.m)
    increments = _wiener_increments(source, _step_size(sim))
    trajectory = _run(ens, prob, sim, _noise_map(prob, sim), increments)
    trajectory.rng_seed = seed
    return trajectory


def step_halving_check(
    ens: Ensemble,
    prob: InverseProblem,
    sim: SimConfig,
    seed: Optional[int] = None,
) -> float:
    """Relative change of the final ensemble when the step is halved.

    Stochastic runs reuse the Wiener path of run_stochastic(ens, prob, sim,
    seed): every coarse increment is split into two half-step increments by
    a Brownian bridge, so the difference measures the strong time
    discretization error.

    Args:
        ens (Ensemble): Initial ensemble.
        prob (InverseProblem): The problem.
        sim (SimConfig): Simulation settings.
        seed (Optional[int]): Seed of the Wiener increments, needed for
            stochastic runs.

    Returns:
        float: ‖U_h(T) − U_{h/2}(T)‖_F / ‖U_{h/2}(T)‖_F.

    Raises:
        ValueError: If a stochastic run has no seed.
    """
    if sim.sigma_mode is SigmaMode.DETERMINISTIC:
        coarse = _run(ens, prob, sim)
        fine = _run(ens, prob, sim, refine=2)
    else:
        if seed is None:
            raise ValueError("A stochastic step halving check needs a seed")
        noise_map = _noise_map(prob, sim)
        h = _step_size(sim)

        source, _ = _sources(seed, ens.J, prob.m)
        coarse = _run(ens, prob, sim, noise_map, _wiener_increments(source, h))
        source, bridge = _sources(seed, ens.J, prob.m)
        increments = _bridged_increments(source, bridge, h)
        fine = _run(ens, prob, sim, noise_map, increments, refine=2)

    final = fine.particles[-1]
    diff = torch.linalg.norm(coarse.particles[-1] - final).item()
    scale = torch.linalg.norm(final).item()
    change = diff / scale if scale > 0 else diff
    logger.info("Step halving at dt=%g changes the ensemble by %.3e", sim.dt, change)
    return change


def run_replicates(
    m0: Any,
    C0: Any,
    J: int,
    prob: InverseProblem,
    sim: SimConfig,
    seed: int,
    replicates: int,
    max_workers: Optional[int] = None,
    moment_matched: bool = True,
) -> List[EnsembleTrajectory]:
    """Independent stochastic replicates, run in parallel.

    Replicate r draws its initial ensemble and its increments from seeds split
    off the root seed, so results do not depend on the scheduling.

    Args:
        m0 (Any): Prior mean.
        C0 (Any): Prior covariance.
        J (int): Ensemble size.
        prob (InverseProblem): The problem.
        sim (SimConfig): Stochastic simulation settings.
        seed (int): Root seed.
        replicates (int): Number of replicates.
        max_workers (Optional[int]): Cap on parallel workers.
        moment_matched (bool): Moment-matched initial ensembles. Defaults to True.

    Returns:
        List[EnsembleTrajectory]: Trajectories in replicate order.

    Raises:
        ValueError: If replicates < 1.
    """
    if replicates < 1:
        raise ValueError(f"replicates should be positive, got {replicates}")

    def replicate(index: int, child_seed: int) -> EnsembleTrajectory:
        init_seed, noise_seed = split_seeds(child_seed, 2)
        ens = init_from_prior(m0, C0, J, init_seed, moment_matched=moment_matched)
        ens.rng_stream = index
        return run_stochastic(ens, prob, sim, noise_seed)

    args = [[index, child] for index, child in enumerate(split_seeds(seed, replicates))]
    return parallel_execution(replicate, max_workers=max_workers)(args)


def average_moments(
    trajectories: List[EnsembleTrajectory],
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Replicate average of the empirical moments along the trajectories.

    Args:
        trajectories (List[EnsembleTrajectory]): Replicates on the same time grid.

    Returns:
        Tuple[torch.Tensor, torch.Tensor]: K×n mean and K×n×n covariance.
    """
    means, covs = zip(*(trajectory.moments() for trajectory in trajectories))
    return torch.stack(means).mean(dim=0), torch.stack(covs).mean(dim=0)


def propagate_closed_form(
    ens: Ensemble,
    prob: InverseProblem,
    times: Any,
    config: Optional[Config] = None,
) -> EnsembleTrajectory:
    """Exact deterministic particle trajectories.

    Every particle obeys the mean equation with the α = 2 covariance flow
    started at the ensemble's own empirical covariance, so
    uʲ(t) = mean_at(cfg, prob, uʲ(0), t).

    Args:
        ens (Ensemble): Initial ensemble with a nonsingular empirical covariance.
        prob (InverseProblem): The problem.
        times (Any): Recording times.
        config (Optional[Config]): Tolerances.

    Returns:
        EnsembleTrajectory: Particles at the requested times.
    """
    m, C = empirical_moments(ens)
    cfg = FlowConfig.from_problem(prob, m, C, alpha=ALPHA_DETERMINISTIC, config=config)
    times = as_tensor(times).reshape(-1)
    particles = mean_path(cfg, prob, ens.particles, times)
    return EnsembleTrajectory(
        times=times,
        particles=particles,
        rng_seed=ens.rng_seed,
        rng_stream=ens.rng_stream,
    )


def subspace_check(trajectory: EnsembleTrajectory, rel_tol: float = 1e-12) -> float:
    """Largest distance of a particle to the affine span of the initial ensemble.

    Args:
        trajectory (EnsembleTrajectory): Recorded run.
        rel_tol (float): Relative singular value cut for the span.

    Returns:
        float: max over t and j of dist(uʲ(t), m(0) + span{uᵏ(0) − m(0)}).
    """
    initial = trajectory.particles[0]
    center = initial.mean(dim=0)
    centered = initial - center

    _, singular, basis = torch.linalg.svd(centered, full_matrices=False)
    largest = singular[0].item() if singular.numel() else 0.0
    cut = rel_tol * max(centered.shape) * largest
    basis = basis[singular > cut]

    offsets = trajectory.particles - center
    residual = offsets - offsets @ basis.T @ basis
    return torch.linalg.norm(residual, dim=-1).max().item()
