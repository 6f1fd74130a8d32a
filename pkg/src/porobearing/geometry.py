"""Bearing parameters, film-height functions and Reynolds coefficients.

Two parameter sets are used throughout the package:

* :class:`BearingGeometry` holds the physical data of a finite porous journal
  bearing (annular matrix ``R1 < rho < R2``, length ``L``).
* :class:`LongBearingConfig` holds the dimensionless data of the long-bearing
  reduction on the rectangle ``(0, pi) x (0, a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ReynoldsCoefficients:
    k1: float
    k2: float
    k3: float


@dataclass(frozen=True)
class BearingGeometry:
    """Physical parameters of a porous journal bearing.

    Parameters
    ----------
    R1, R2 : float
        Inner and outer (film side) radius of the porous matrix.
    L : float
        Bearing length.
    c : float
        Radial clearance.
    eps : float
        Eccentricity ratio, ``0 <= eps < 1``. ``eps = 0`` is the concentric
        shaft and gives a zero load.
    mu : float
        Lubricant viscosity.
    U : float
        Shaft surface speed.
    Phi : float
        Permeability of the porous matrix.
    """

    R1: float
    R2: float
    L: float
    c: float
    eps: float
    mu: float
    U: float
    Phi: float

    def __post_init__(self):
        problems = []
        if not 0.0 < self.R1 < self.R2:
            problems.append(f"need 0 < R1 < R2 (got R1={self.R1}, R2={self.R2})")
        for name in ("L", "c", "mu", "Phi"):
            if not getattr(self, name) > 0.0:
                problems.append(f"need {name} > 0 (got {getattr(self, name)})")
        if not self.U >= 0.0:
            problems.append(f"need U >= 0 (got {self.U})")
        if not 0.0 <= self.eps < 1.0:
            problems.append(f"need 0 <= eps < 1 (got eps={self.eps})")
        if problems:
            raise ValueError("invalid BearingGeometry: " + "; ".join(problems))

    @property
    def coefficients(self) -> ReynoldsCoefficients:
        return reynolds_coefficients(self)


@dataclass(frozen=True)
class LongBearingConfig:
    """Dimensionless long-bearing data.

    ``a`` is the thickness of the porous layer, the film lies on ``y = a`` and
    has height ``h(x) = 1 + eps cos(2x)``. ``k1`` and ``k3`` multiply the
    film stiffness and the wedge forcing; both are 1 in the normalized model.
    """

    a: float
    eps: float
    k1: float = 1.0
    k3: float = 1.0

    def __post_init__(self):
        problems = []
        if not self.a > 0.0:
            problems.append(f"need a > 0 (got a={self.a})")
        if not 0.0 <= self.eps < 1.0:
            problems.append(f"need 0 <= eps < 1 (got eps={self.eps})")
        if not self.k1 > 0.0:
            problems.append(f"need k1 > 0 (got k1={self.k1})")
        if not self.k3 >= 0.0:
            problems.append(f"need k3 >= 0 (got k3={self.k3})")
        if problems:
            raise ValueError("invalid LongBearingConfig: " + "; ".join(problems))


def film_height_journal(theta, geom: BearingGeometry):
    """Film height ``c (1 + eps cos(theta))`` of the journal bearing."""
    return geom.c * (1.0 + geom.eps * np.cos(theta))


def film_height_journal_derivative(theta, geom: BearingGeometry):
    return -geom.c * geom.eps * np.sin(theta)


def film_height_long(x, cfg: LongBearingConfig):
    """Film height ``1 + eps cos(2x)`` of the long bearing on ``[0, pi]``."""
    return 1.0 + cfg.eps * np.cos(2.0 * x)


def film_height_long_derivative(x, cfg: LongBearingConfig):
    return -2.0 * cfg.eps * np.sin(2.0 * x)


def reynolds_coefficients(geom: BearingGeometry) -> ReynoldsCoefficients:
    """Coupling coefficients of the surface Reynolds equation.

    ``k1 = c^2 / (12 Phi R2^2)``, ``k2 = c^2 / (12 L^2 Phi)`` and
    ``k3 = 6 U mu / (12 Phi R2)``; the last one equals ``U mu / (2 Phi R2)``
    but is evaluated in the unsimplified form.
    """
    for name in ("c", "Phi", "R2", "L", "mu"):
        value = getattr(geom, name)
        if not (value > 0.0 and math.isfinite(value)):
            raise ValueError(f"{name} must be positive and finite, got {value}")
    k1 = geom.c**2 / (12.0 * geom.Phi * geom.R2**2)
    k2 = geom.c**2 / (12.0 * geom.L**2 * geom.Phi)
    k3 = 6.0 * geom.U * geom.mu / (12.0 * geom.Phi * geom.R2)
    return ReynoldsCoefficients(k1=k1, k2=k2, k3=k3)
