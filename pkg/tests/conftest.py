import math

import numpy as np
import pytest

from porobearing.coupled3d import CylindricalGrid, assemble_coupled_system
from porobearing.geometry import BearingGeometry


@pytest.fixture(scope="session")
def geom():
    # k1 = k2 = 1, k3 = 1/2
    return BearingGeometry(R1=0.5, R2=1.0, L=1.0, c=1.0, eps=0.5, mu=1.0, U=1.0, Phi=1.0 / 12.0)


@pytest.fixture(scope="session")
def thin_geom():
    # c < 1 so the h^3 bounds differ from 1
    return BearingGeometry(R1=0.8, R2=1.0, L=2.0, c=0.7, eps=0.3, mu=2.0, U=1.5, Phi=0.01)


@pytest.fixture(scope="session")
def small_system(geom):
    return assemble_coupled_system(geom, CylindricalGrid.for_geometry(geom, 7, 24, 7))


@pytest.fixture(scope="session")
def thin_system(thin_geom):
    return assemble_coupled_system(thin_geom, CylindricalGrid.for_geometry(thin_geom, 6, 20, 8))


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def sin2x(x):
    return np.sin(2.0 * np.asarray(x))


PI = math.pi
