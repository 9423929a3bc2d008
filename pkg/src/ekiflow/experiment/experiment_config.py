"""Strict JSON configuration of an experiment run.

A configuration file looks like::

    {
      "experiment": "nonmonotonicity",
      "problem": {"A": [[100, 0], [0, 1]], "Gamma": [[1, 0], [0, 1]],
                  "y": [0, 0], "m0": [100, 100],
                  "C0": [[25, -24], [-24, 25]]},
      "flow": {"alpha": 2.0},
      "sim": {"ensemble_size": 10},
      "grid": {"t_start": 0.0, "t_end": 1.0, "num_points": 1000},
      "seed": 0
    }

Matrices are row-major nested arrays. Unknown keys are rejected, missing
optional keys take their defaults.
"""

# stdlib
from dataclasses import dataclass
from dataclasses import replace
import json
import math
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Union

# third party
import torch

from ekiflow.ensemble import SimConfig
from ekiflow.linalg import gamma_projection
from ekiflow.problem import InverseProblem
from ekiflow.utils import as_tensor

from .registry import ConfigError
from .registry import ExperimentRegistry

Matrix = List[List[float]]
Vector = List[float]

SPACINGS = ("linear", "log")
NOISE_FREE_EXPERIMENTS = ("rates",)


@dataclass(frozen=True)
class ProblemSection:
    """Inline inverse problem with its Gaussian prior."""

    A: Matrix
    Gamma: Matrix
    y: Vector
    m0: Vector
    C0: Matrix
    u_truth: Optional[Vector] = None
    eps: Optional[Vector] = None

    def build(self) -> InverseProblem:
        """Build the inverse problem.

        Returns:
            InverseProblem: The problem.
        """
        return InverseProblem(
            A=self.A, Gamma=self.Gamma, y=self.y, u_truth=self.u_truth, eps=self.eps
        )

    @property
    def prior_mean(self) -> torch.Tensor:
        """m0 as a tensor.

        Returns:
            torch.Tensor: The prior mean.
        """
        return as_tensor(self.m0)

    @property
    def prior_cov(self) -> torch.Tensor:
        """C0 as a tensor.

        Returns:
            torch.Tensor: The prior covariance.
        """
        return as_tensor(self.C0)


@dataclass(frozen=True)
class FlowSection:
    """Flow parameter α."""

    alpha: float = 2.0


@dataclass(frozen=True)
class SimSection:
    """Particle simulation settings."""

    sigma_mode: str = "deterministic"
    dt: float = 1e-3
    t_end: float = 1.0
    scheme: Optional[str] = None
    ensemble_size: int = 10
    moment_matched: bool = True
    sigma_scale: float = 1.0

    def build(self, record_every: int = 1, **changes: Any) -> SimConfig:
        """Build the simulation settings.

        Args:
            record_every (int): Recording stride.
            **changes (Any): Overrides of the section fields.

        Returns:
            SimConfig: The settings.
        """
        section = replace(self, **changes)
        return SimConfig(
            sigma_mode=section.sigma_mode,
            dt=section.dt,
            t_end=section.t_end,
            scheme=section.scheme,
            sigma_scale=section.sigma_scale,
            record_every=record_every,
        )


@dataclass(frozen=True)
class GridConfig:
    """Output time grid."""

    t_start: float
    t_end: float
    num_points: int
    spacing: str = "linear"

    def times(self) -> torch.Tensor:
        """The grid.

        Returns:
            torch.Tensor: num_points times, linearly or logarithmically spaced.
        """
        if self.spacing == "log":
            return torch.logspace(
                math.log10(self.t_start),
                math.log10(self.t_end),
                self.num_points,
                dtype=torch.float64,
            )
        return torch.linspace(
            self.t_start, self.t_end, self.num_points, dtype=torch.float64
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """A complete experiment run."""

    experiment: str
    problem: ProblemSection
    grid: GridConfig
    flow: FlowSection = FlowSection()
    sim: SimSection = SimSection()
    seed: int = 0
    output_dir: str = "results"
    replicates: int = 1


def _check_keys(raw: Any, allowed: List[str], required: List[str], path: str) -> None:
    if not isinstance(raw, dict):
        raise ConfigError(path, "should be an object")
    for key in raw:
        if key not in allowed:
            raise ConfigError(_join(path, key), "unknown key")
    for key in required:
        if key not in raw:
            raise ConfigError(_join(path, key), "missing key")


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _number(raw: Any, path: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(path, f"should be a number, got {raw!r}")
    value = float(raw)
    if not math.isfinite(value):
        raise ConfigError(path, "should be finite")
    return value


def _integer(raw: Any, path: str, minimum: int) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(path, f"should be an integer, got {raw!r}")
    if raw < minimum:
        raise ConfigError(path, f"should be at least {minimum}, got {raw}")
    return raw


def _vector(raw: Any, path: str, size: Optional[int] = None) -> Vector:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(path, "should be a non empty array of numbers")
    vector = [_number(value, f"{path}[{i}]") for i, value in enumerate(raw)]
    if size is not None and len(vector) != size:
        raise ConfigError(path, f"should have length {size}, got {len(vector)}")
    return vector


def _matrix(raw: Any, path: str, shape: Optional[tuple] = None) -> Matrix:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(path, "should be a non empty array of rows")
    rows = [_vector(row, f"{path}[{i}]") for i, row in enumerate(raw)]
    if any(len(row) != len(rows[0]) for row in rows):
        raise ConfigError(path, "rows should have the same length")
    if shape is not None and (len(rows), len(rows[0])) != shape:
        raise ConfigError(
            path, f"should be {shape[0]}x{shape[1]}, got {len(rows)}x{len(rows[0])}"
        )
    return rows


def _spd(matrix: Matrix, path: str) -> None:
    tensor = as_tensor(matrix)
    if not torch.allclose(tensor, tensor.T, rtol=1e-12, atol=1e-12):
        raise ConfigError(path, "should be symmetric")
    smallest = torch.linalg.eigvalsh(tensor)[0].item()
    if smallest <= 0:
        raise ConfigError(
            path, f"should be positive definite, smallest eigenvalue {smallest:.6g}"
        )


def _parse_problem(raw: Any) -> ProblemSection:
    keys = ["A", "Gamma", "y", "m0", "C0", "u_truth", "eps"]
    _check_keys(raw, keys, ["A", "Gamma", "y", "m0", "C0"], "problem")

    A = _matrix(raw["A"], "problem.A")
    m, n = len(A), len(A[0])
    Gamma = _matrix(raw["Gamma"], "problem.Gamma", (m, m))
    _spd(Gamma, "problem.Gamma")
    y = _vector(raw["y"], "problem.y", m)
    m0 = _vector(raw["m0"], "problem.m0", n)
    C0 = _matrix(raw["C0"], "problem.C0", (n, n))
    _spd(C0, "problem.C0")

    u_truth = raw.get("u_truth")
    if u_truth is not None:
        u_truth = _vector(u_truth, "problem.u_truth", n)
    eps = raw.get("eps")
    if eps is not None:
        eps = _vector(eps, "problem.eps", m)

    section = ProblemSection(
        A=A, Gamma=Gamma, y=y, m0=m0, C0=C0, u_truth=u_truth, eps=eps
    )
    try:
        section.build()
    except ValueError as e:
        raise ConfigError("problem", str(e))
    return section


def _check_noise_free(section: ProblemSection, experiment: str) -> None:
    if section.eps is not None and any(value != 0 for value in section.eps):
        raise ConfigError("problem.eps", f"{experiment} needs noise-free data, eps = 0")

    prob = section.build()
    residual = prob.y - gamma_projection(prob.y, prob.A, prob.Gamma)
    scale = 1 + torch.linalg.norm(prob.y).item()
    if torch.linalg.norm(residual).item() > 1e-10 * scale:
        raise ConfigError("problem.y", f"{experiment} needs y in the range of A")


def _parse_flow(raw: Any) -> FlowSection:
    _check_keys(raw, ["alpha"], [], "flow")
    alpha = _number(raw.get("alpha", FlowSection.alpha), "flow.alpha")
    if alpha < 1:
        raise ConfigError("flow.alpha", f"should be at least 1, got {alpha}")
    return FlowSection(alpha=alpha)


def _parse_sim(raw: Any, n: int) -> SimSection:
    keys = list(SimSection.__dataclass_fields__)
    _check_keys(raw, keys, [], "sim")
    defaults = SimSection()

    scheme = raw.get("scheme", defaults.scheme)
    if scheme is not None and not isinstance(scheme, str):
        raise ConfigError("sim.scheme", "should be a string or null")
    moment_matched = raw.get("moment_matched", defaults.moment_matched)
    if not isinstance(moment_matched, bool):
        raise ConfigError("sim.moment_matched", "should be a boolean")
    sigma_mode = raw.get("sigma_mode", defaults.sigma_mode)
    if not isinstance(sigma_mode, str):
        raise ConfigError("sim.sigma_mode", "should be a string")

    section = SimSection(
        sigma_mode=sigma_mode,
        dt=_number(raw.get("dt", defaults.dt), "sim.dt"),
        t_end=_number(raw.get("t_end", defaults.t_end), "sim.t_end"),
        scheme=scheme,
        ensemble_size=_integer(
            raw.get("ensemble_size", defaults.ensemble_size), "sim.ensemble_size", 2
        ),
        moment_matched=moment_matched,
        sigma_scale=_number(
            raw.get("sigma_scale", defaults.sigma_scale), "sim.sigma_scale"
        ),
    )
    if section.moment_matched and section.ensemble_size <= n:
        raise ConfigError(
            "sim.moment_matched",
            f"needs ensemble_size > {n}, got {section.ensemble_size}",
        )
    try:
        section.build()
    except ValueError as e:
        raise ConfigError("sim", str(e))
    return section


def _parse_grid(raw: Any) -> GridConfig:
    _check_keys(raw, ["t_start", "t_end", "num_points", "spacing"], ["t_end"], "grid")
    grid = GridConfig(
        t_start=_number(raw.get("t_start", 0.0), "grid.t_start"),
        t_end=_number(raw["t_end"], "grid.t_end"),
        num_points=_integer(raw.get("num_points", 0), "grid.num_points", 2),
        spacing=raw.get("spacing", "linear"),
    )
    if grid.spacing not in SPACINGS:
        raise ConfigError("grid.spacing", f"should be one of {SPACINGS}")
    if grid.t_start < 0:
        raise ConfigError("grid.t_start", "should be non negative")
    if grid.t_end <= grid.t_start:
        raise ConfigError("grid.t_end", "should be larger than grid.t_start")
    if grid.spacing == "log" and grid.t_start <= 0:
        raise ConfigError("grid.t_start", "should be positive for a log grid")
    return grid


def config_from_dict(raw: Any) -> ExperimentConfig:
    """Validate a decoded configuration.

    Args:
        raw (Any): Decoded JSON document.

    Returns:
        ExperimentConfig: The configuration.

    Raises:
        ConfigError: If a key is unknown, missing or invalid.
    """
    keys = list(ExperimentConfig.__dataclass_fields__)
    _check_keys(raw, keys, ["experiment", "problem", "grid"], "")

    experiment = raw["experiment"]
    if experiment not in ExperimentRegistry.names():
        raise ConfigError(
            "experiment",
            f"unknown experiment {experiment!r}, "
            f"expected one of {ExperimentRegistry.names()}",
        )

    problem = _parse_problem(raw["problem"])
    if experiment in NOISE_FREE_EXPERIMENTS:
        _check_noise_free(problem, experiment)
    output_dir = raw.get("output_dir", ExperimentConfig.output_dir)
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir", "should be a non empty string")

    return ExperimentConfig(
        experiment=experiment,
        problem=problem,
        grid=_parse_grid(raw["grid"]),
        flow=_parse_flow(raw.get("flow", {})),
        sim=_parse_sim(raw.get("sim", {}), len(problem.m0)),
        seed=_integer(raw.get("seed", ExperimentConfig.seed), "seed", 0),
        output_dir=output_dir,
        replicates=_integer(
            raw.get("replicates", ExperimentConfig.replicates), "replicates", 1
        ),
    )


def parse_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate an experiment configuration file.

    Args:
        path (Union[str, Path]): JSON file.

    Returns:
        ExperimentConfig: The configuration.

    Raises:
        ConfigError: If the file cannot be read, is not JSON or is invalid.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError("", f"cannot read {path}: {e.strerror}")

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("", f"malformed JSON at line {e.lineno}: {e.msg}")

    return config_from_dict(raw)


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Plain representation with every key present.

    Args:
        cfg (ExperimentConfig): The configuration.

    Returns:
        Dict[str, Any]: JSON-compatible dictionary.
    """
    problem = cfg.problem
    return {
        "experiment": cfg.experiment,
        "problem": {
            "A": problem.A,
            "Gamma": problem.Gamma,
            "y": problem.y,
            "m0": problem.m0,
            "C0": problem.C0,
            "u_truth": problem.u_truth,
            "eps": problem.eps,
        },
        "flow": {"alpha": cfg.flow.alpha},
        "sim": {
            "sigma_mode": cfg.sim.sigma_mode,
            "dt": cfg.sim.dt,
            "t_end": cfg.sim.t_end,
            "scheme": cfg.sim.scheme,
            "ensemble_size": cfg.sim.ensemble_size,
            "moment_matched": cfg.sim.moment_matched,
            "sigma_scale": cfg.sim.sigma_scale,
        },
        "grid": {
            "t_start": cfg.grid.t_start,
            "t_end": cfg.grid.t_end,
            "num_points": cfg.grid.num_points,
            "spacing": cfg.grid.spacing,
        },
        "seed": cfg.seed,
        "output_dir": cfg.output_dir,
        "replicates": cfg.replicates,
    }


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical serialization: every key, sorted, two-space indent.

    Args:
        cfg (ExperimentConfig): The configuration.

    Returns:
        str: JSON text ending in a newline.
    """
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def with_overrides(cfg: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """Revalidated copy with top-level keys replaced; None values are ignored.

    Args:
        cfg (ExperimentConfig): The configuration.
        **overrides (Any): New values for output_dir, seed or replicates.

    Returns:
        ExperimentConfig: The configuration.
    """
    raw = config_to_dict(cfg)
    raw.update({key: value for key, value in overrides.items() if value is not None})
    return config_from_dict(raw)
