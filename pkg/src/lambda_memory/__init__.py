"""Weak-probe storage and retrieval in an optically thick Lambda-type medium."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    Config,
    ConfigError,
    ControlSchedule,
    ControlWindow,
    DopplerSpec,
    LambdaSystem,
    MediumSpec,
    ProbeSpec,
    TimeGrid,
    validate_config,
)

__all__ = [
    "Config",
    "ConfigError",
    "ControlSchedule",
    "ControlWindow",
    "DopplerSpec",
    "LambdaSystem",
    "MediumSpec",
    "ProbeSpec",
    "TimeGrid",
    "validate_config",
]
