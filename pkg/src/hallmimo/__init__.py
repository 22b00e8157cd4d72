"""Uplink outage simulator for centralized and distributed massive MIMO
serving machine-type devices in a square industrial hall."""

__version__ = "0.1.0"

from .channel import RadioConfig
from .geometry import DeploymentSpec, Position, SiteConfig
from .montecarlo import OutageResult, SimConfig, run_point, run_sweep
from .traffic import AlarmEvent, TrafficModel

__all__ = [
    "__version__",
    "AlarmEvent",
    "DeploymentSpec",
    "OutageResult",
    "Position",
    "RadioConfig",
    "SimConfig",
    "SiteConfig",
    "TrafficModel",
    "run_point",
    "run_sweep",
]
