"""Discrete-event simulator of a single-gateway LoRaWAN Class-A cell."""

from .config import ConfigError, SimConfig, load_config
from .metrics import MetricsReport, aggregate, compute_metrics
from .simulation import Simulation

__version__ = "0.1.0"

__all__ = ["ConfigError", "MetricsReport", "SimConfig", "Simulation", "aggregate",
           "compute_metrics", "load_config", "__version__"]
