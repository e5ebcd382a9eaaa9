"""Steady-state entanglement of two driven, interacting emitters in a cavity."""
__version__ = "0.1.0"

from .model import SystemParams, DipoleGeometry, dipole_coupling  # noqa: E402
from .config import load_config, fixture_path, resolve_system  # noqa: E402

__all__ = ["SystemParams", "DipoleGeometry", "dipole_coupling", "load_config",
           "fixture_path", "resolve_system", "__version__"]
