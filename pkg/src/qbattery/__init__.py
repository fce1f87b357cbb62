"""Quench-charged bosonic quantum batteries: dynamics, closed forms and scaling."""

__version__ = "0.1.0"

from .errors import QBatteryError
from .model import QuenchProtocol, SystemParams

__all__ = ["QBatteryError", "QuenchProtocol", "SystemParams", "__version__"]
