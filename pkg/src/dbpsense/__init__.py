"""Sensor-placement engine for disinfection by-product risk in water networks."""

__version__ = "0.1.0"

from .errors import EngineError

__all__ = ["EngineError", "__version__"]
