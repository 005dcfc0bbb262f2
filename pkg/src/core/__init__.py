"""Core configuration, data models and errors."""

from src.core.config import RunConfig, Settings, get_settings, load_run_config
from src.core.exceptions import AttackCircuitError, ConfigError
from src.core.models import AttackCircuit, IoPair, ScoreReport

__all__ = [
    "AttackCircuitError",
    "AttackCircuit",
    "ConfigError",
    "IoPair",
    "RunConfig",
    "ScoreReport",
    "Settings",
    "get_settings",
    "load_run_config",
]
