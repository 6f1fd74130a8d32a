"""Pressure in porous journal bearings."""

from .coupled3d import (
    ConvergenceError,
    CylindricalGrid,
    assemble_coupled_system,
    solve_bilateral,
    solve_unilateral,
)
from .freeboundary import ForcingFunction, cavitation_point, solve_free_boundary
from .geometry import BearingGeometry, LongBearingConfig, reynolds_coefficients
from .obstacle import ObstacleProblem, complementarity_check, projected_sor
from .spectral import (
    assemble_spectral_system,
    dirichlet_solve,
    explicit_small_eccentricity,
    solve_long_bearing,
    solve_long_bearing_cavitation,
)

__version__ = "0.1.0"

__all__ = [
    "BearingGeometry",
    "ConvergenceError",
    "CylindricalGrid",
    "ForcingFunction",
    "LongBearingConfig",
    "ObstacleProblem",
    "assemble_coupled_system",
    "assemble_spectral_system",
    "cavitation_point",
    "complementarity_check",
    "dirichlet_solve",
    "explicit_small_eccentricity",
    "projected_sor",
    "reynolds_coefficients",
    "solve_bilateral",
    "solve_free_boundary",
    "solve_long_bearing",
    "solve_long_bearing_cavitation",
    "solve_unilateral",
]
