"""Run a configured experiment and write its summary."""

# stdlib
import logging
from typing import Optional

from ekiflow.config import Config

from .experiment_config import ExperimentConfig
from .registry import ExperimentRegistry
from .writer import ResultWriter

logger = logging.getLogger(__name__)

EXIT_PASSED = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


def run_experiment(cfg: ExperimentConfig, config: Optional[Config] = None) -> int:
    """Run an experiment, write its tables and summary.json.

    The summary holds the raw scalars, a ``checks`` object of booleans and
    ``passed``, the conjunction of the checks.

    Args:
        cfg (ExperimentConfig): Parsed configuration.
        config (Optional[Config]): Library configuration.

    Returns:
        int: 0 if every check passed, 1 otherwise.
    """
    config = config or Config()
    writer = ResultWriter(cfg.output_dir)

    logger.info("Running %s with seed %d", cfg.experiment, cfg.seed)
    summary = ExperimentRegistry.run(cfg.experiment, cfg, writer, config)

    checks = summary.get("checks", {})
    for name, passed in sorted(checks.items()):
        if not passed:
            logger.warning("Check %s failed for %s", name, cfg.experiment)

    summary["experiment"] = cfg.experiment
    summary["seed"] = cfg.seed
    summary["passed"] = all(checks.values())
    writer.write_summary(summary)

    logger.info("Finished %s, passed=%s", cfg.experiment, summary["passed"])
    return EXIT_PASSED if summary["passed"] else EXIT_CHECK_FAILED
