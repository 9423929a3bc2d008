import ekiflow


def test_imports() -> None:
    ekiflow.bayes
    ekiflow.config
    ekiflow.dae
    ekiflow.diagnostics
    ekiflow.ensemble
    ekiflow.experiment
    ekiflow.flow
    ekiflow.linalg
    ekiflow.problem
    ekiflow.utils
