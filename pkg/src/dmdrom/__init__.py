"""Parametric reduced-order models from POD, DMD and manifold interpolation.

Offline, each sample trajectory is compressed by a two-tier POD and fitted
with a real-valued DMD. Online, DMD modes are interpolated on the Grassmann
manifold and reduced operators on GL(r) to predict the trajectory at an
unsampled parameter.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, FormatError, NumericalError, PreconditionError, RomError
from .snapshots import Trajectory, generate_limit_cycle_family, load_trajectory, save_trajectory
from .pipeline import InitSource, PipelineConfig, RomDatabase, offline, online, relative_errors

__all__ = [
    "ConfigError", "DomainError", "FormatError", "NumericalError", "PreconditionError", "RomError",
    "Trajectory", "generate_limit_cycle_family", "load_trajectory", "save_trajectory",
    "InitSource", "PipelineConfig", "RomDatabase", "offline", "online", "relative_errors",
]
