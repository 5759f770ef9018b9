"""
Dependency resolution for CLI commands.
"""

import logging
from functools import lru_cache
from typing import Any, Optional

from app.config.settings import RunConfig
from app.core.exceptions import ConfigurationError
from app.services.evaluation_service import EvaluationService
from app.services.sweep_service import SweepService
from app.services.training_service import TrainingService
from app.services.workload_service import WorkloadService

logger = logging.getLogger("connection_router")


@lru_cache()
def get_base_config(config_path: Optional[str] = None) -> RunConfig:
    """
    Get the environment configuration layered under an optional JSON file (cached).

    Args:
        config_path: Path given with --config

    Returns:
        RunConfig: Configuration before command-line overrides
    """
    try:
        base = RunConfig.from_env()
        return RunConfig.from_file(config_path, base=base) if config_path else base
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        raise


def get_config(config_path: Optional[str] = None, **overrides: Any) -> RunConfig:
    """Resolved configuration: defaults < environment < config file < flags."""
    return get_base_config(config_path).with_overrides(**overrides)


def get_workload_service(config: RunConfig) -> WorkloadService:
    return WorkloadService(config)


def get_evaluation_service(config: RunConfig) -> EvaluationService:
    return EvaluationService(config, get_workload_service(config))


def get_training_service(config: RunConfig) -> TrainingService:
    return TrainingService(config, get_workload_service(config))


def get_sweep_service(config: RunConfig) -> SweepService:
    return SweepService(config, get_workload_service(config))
