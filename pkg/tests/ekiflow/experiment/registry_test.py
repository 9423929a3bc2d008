# third party
import pytest

from ekiflow.experiment import ConfigError
from ekiflow.experiment import ExperimentRegistry
from ekiflow.experiment import register_experiment

SHIPPED = [
    "asymptotic-profile",
    "dae-spectrum",
    "discrete-vs-continuous",
    "fig-covariances",
    "nonmonotonicity",
    "rates",
    "subspace",
]


def test_registered_names() -> None:
    assert ExperimentRegistry.names() == SHIPPED


def test_registry_not_instantiable() -> None:
    with pytest.raises(ValueError):
        ExperimentRegistry()


def test_get_unknown() -> None:
    with pytest.raises(ValueError):
        ExperimentRegistry.get("missing")


def test_register_and_run() -> None:
    name = "registry-test-echo"

    @register_experiment(name)
    def echo(value):
        return {"value": value}

    try:
        assert ExperimentRegistry.get(name) is echo
        assert ExperimentRegistry.run(name, 3) == {"value": 3}

        with pytest.raises(ValueError):
            register_experiment(name)(echo)
    finally:
        del ExperimentRegistry._func_experiments[name]


def test_config_error_message() -> None:
    error = ConfigError("problem.C0", "should be symmetric")

    assert str(error) == "problem.C0: should be symmetric"
    assert str(ConfigError("", "malformed")) == "<root>: malformed"
    assert error.to_json() == {
        "error": "config",
        "key": "problem.C0",
        "message": "should be symmetric",
    }
    assert isinstance(error, ValueError)
