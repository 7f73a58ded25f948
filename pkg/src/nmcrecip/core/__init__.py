"""Shared domain types: paths, intensity models, perturbations, functionals, RNG streams."""

from .errors import (
    AcceptanceError,
    DegenerateConditioningError,
    DomainError,
    InputError,
    InsufficientDataError,
    ModelError,
    NumericError,
    SimulationError,
    TieError,
)
from .functionals import FunctionalSyntaxError, SimpleFunctional
from .models import (
    DEFAULT_WINDOW,
    Constant,
    ExponentialTime,
    IntensityModel,
    SpaceOnly,
    Tabulated,
    TimeOnly,
    model_from_config,
)
from .paths import (
    Path,
    PathBatch,
    path_left_value,
    path_value,
    read_paths_csv,
    write_paths_csv,
)
from .perturbations import Bump, Perturbation, Sine, perturbation_from_config
from .rng import RngStream, as_generator

__all__ = [
    "AcceptanceError",
    "DegenerateConditioningError",
    "InputError",
    "InsufficientDataError",
    "NumericError",
    "SimulationError",
    "TieError",
    "DEFAULT_WINDOW",
    "Bump",
    "Constant",
    "DomainError",
    "ExponentialTime",
    "FunctionalSyntaxError",
    "IntensityModel",
    "ModelError",
    "Path",
    "PathBatch",
    "Perturbation",
    "RngStream",
    "SimpleFunctional",
    "Sine",
    "SpaceOnly",
    "Tabulated",
    "TimeOnly",
    "as_generator",
    "model_from_config",
    "path_left_value",
    "path_value",
    "perturbation_from_config",
    "read_paths_csv",
    "write_paths_csv",
]
