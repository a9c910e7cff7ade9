"""Monte Carlo uplink spectral efficiency of fixed, rotary and movable ULAs."""

from .config import ConfigError, SystemConfig
from .experiment import ApVariant, SweepRecord, SweepSpec, run_realization, run_sweep, summarize
from .locopt import ApType

__all__ = [
    "ApType",
    "ApVariant",
    "ConfigError",
    "SweepRecord",
    "SweepSpec",
    "SystemConfig",
    "run_realization",
    "run_sweep",
    "summarize",
]

__version__ = "0.1.0"
