"""Simulator and learners for RSMA-assisted 360-degree video streaming."""

from .config import QUALITY_TABLE, QualityTier, SystemConfig, db_to_linear
from .env import Action, EnvState, StreamingEnv, Transition, observe, project_action

__version__ = "0.1.0"

__all__ = [
    "QUALITY_TABLE",
    "QualityTier",
    "SystemConfig",
    "db_to_linear",
    "Action",
    "EnvState",
    "StreamingEnv",
    "Transition",
    "observe",
    "project_action",
]
