import math

import numpy as np
import pytest
from scipy.constants import e as ELEMENTARY_CHARGE

from ablab.geomfields import SolenoidSpec, ToroidSpec

R = 0.01
PHI0 = 3.9478e-07  # mu0 n I pi R^2 for the default solenoid, 5 digits


@pytest.fixture
def solenoid():
    return SolenoidSpec(radius=R, turns_per_length=1000.0, current=1.0)


@pytest.fixture
def long_solenoid():
    return SolenoidSpec(radius=R, turns_per_length=1000.0, current=1.0, length=100 * R)


@pytest.fixture
def toroid():
    return ToroidSpec(inner_radius=0.05, outer_radius=0.1, height=0.02, turns=500, current=2.0)


@pytest.fixture
def electron_charge():
    return -ELEMENTARY_CHARGE


def square_loop(half, z=0.0, ccw=True):
    v = np.array([[-half, -half, z], [half, -half, z], [half, half, z], [-half, half, z]])
    if not ccw:
        v = v[::-1]
    from ablab.quadrature import Path
    return Path.polyline(v, closed=True)
