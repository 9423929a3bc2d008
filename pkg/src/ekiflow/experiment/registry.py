"""Registry of the reproducible experiments."""

# stdlib
from typing import Any
from typing import Callable
from typing import Dict
from typing import List


class ConfigError(ValueError):
    """Invalid experiment configuration.

    Attributes:
        key_path (str): Dotted path of the offending key, "" for the whole file.
    """

    def __init__(self, key_path: str, message: str) -> None:
        """Initializer for the ConfigError.

        Args:
            key_path (str): Dotted key path, for example "problem.C0".
            message (str): Description of the problem.
        """
        super().__init__(f"{key_path or '<root>'}: {message}")
        self.key_path = key_path
        self.message = message

    def to_json(self) -> Dict[str, str]:
        """Machine-readable form printed by the command line.

        Returns:
            Dict[str, str]: {"error": "config", "key": ..., "message": ...}.
        """
        return {"error": "config", "key": self.key_path, "message": self.message}


class ExperimentRegistry:
    """Experiments registered by name with ``register_experiment``."""

    _func_experiments: Dict[str, Callable] = {}

    def __init__(self) -> None:  # noqa
        raise ValueError("This class should not be initialized")

    @staticmethod
    def names() -> List[str]:
        """Registered experiment names, sorted.

        Returns:
            List[str]: The names.
        """
        return sorted(ExperimentRegistry._func_experiments)

    @staticmethod
    def get(name: str) -> Callable:
        """Experiment function registered under name.

        Args:
            name (str): Experiment name.

        Returns:
            Callable: The experiment.

        Raises:
            ValueError: If name is not registered.
        """
        if name not in ExperimentRegistry._func_experiments:
            raise ValueError(f"{name} not registered")
        return ExperimentRegistry._func_experiments[name]

    @staticmethod
    def run(name: str, *args: Any, **kwargs: Any) -> Dict[str, Any]:
        """Run a registered experiment.

        Args:
            name (str): Experiment name.
            *args (Any): Forwarded to the experiment.
            **kwargs (Any): Forwarded to the experiment.

        Returns:
            Dict[str, Any]: The experiment summary.
        """
        return ExperimentRegistry.get(name)(*args, **kwargs)
