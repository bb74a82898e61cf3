"""Conservative finite-volume solver for the isotropic 4-wave kinetic equation."""

from __future__ import annotations

from ._kernels import set_threads
from .dispersion import DispersionModel, validate_assumptions
from .errors import ConfigError, DomainError, RangeError, StateError, WaveKinError
from .spectrum import Grid, ProfileSpec, Spectrum, init_from_profile

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DispersionModel", "DomainError", "Grid", "ProfileSpec", "RangeError",
    "Spectrum", "StateError", "WaveKinError", "init_from_profile", "set_threads",
    "validate_assumptions",
]
