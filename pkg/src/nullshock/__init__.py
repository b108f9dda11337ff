"""Numerical checks for a lightlike FRW/TOV shock-wave solution of the Einstein equations."""

from . import (
    exact_solutions,
    lightlike_solution,
    shock_matching,
    surface_geometry,
    tensor_core,
    validation,
)
from .errors import NullShockError
from .exact_solutions import FrwParameters, TovParameters, eos_H, tov_solve
from .lightlike_solution import shock_speed, solve_lightlike
from .shock_matching import MatchedSolution, match
from .tensor_core import MetricSpec, TensorComponents

__version__ = "0.1.0"

__all__ = [
    "FrwParameters",
    "MatchedSolution",
    "MetricSpec",
    "NullShockError",
    "TensorComponents",
    "TovParameters",
    "eos_H",
    "exact_solutions",
    "lightlike_solution",
    "match",
    "shock_matching",
    "shock_speed",
    "solve_lightlike",
    "surface_geometry",
    "tensor_core",
    "tov_solve",
    "validation",
]
