"""Experiment registry, configuration and command line harness."""

from ekiflow.experiment.registry import ConfigError
from ekiflow.experiment.registry import ExperimentRegistry


def register_experiment(name: str):
    """Decorator to register an experiment.

    Args:
        name (str): Name of the experiment, as used in configuration files.

    # noqa: DAR201
    """

    def register(func_experiment):
        if name in ExperimentRegistry._func_experiments:
            raise ValueError(f"Experiment {name} already in _func_experiments")
        ExperimentRegistry._func_experiments[name] = func_experiment
        return func_experiment

    return register


from ekiflow.experiment import experiments  # noqa: 401 E402
from ekiflow.experiment.experiment_config import ExperimentConfig  # noqa: E402
from ekiflow.experiment.experiment_config import GridConfig  # noqa: E402
from ekiflow.experiment.experiment_config import config_from_dict  # noqa: E402
from ekiflow.experiment.experiment_config import config_to_dict  # noqa: E402
from ekiflow.experiment.experiment_config import dump_config  # noqa: E402
from ekiflow.experiment.experiment_config import parse_config  # noqa: E402
from ekiflow.experiment.experiment_config import with_overrides  # noqa: E402
from ekiflow.experiment.runner import run_experiment  # noqa: E402
from ekiflow.experiment.writer import ResultWriter  # noqa: E402

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentRegistry",
    "GridConfig",
    "ResultWriter",
    "config_from_dict",
    "config_to_dict",
    "dump_config",
    "parse_config",
    "register_experiment",
    "run_experiment",
    "with_overrides",
]
