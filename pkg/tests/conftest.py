import math

import numpy as np
import pytest

from openbilliard import presets
from openbilliard.orbits import find_periodic_orbit

# closed-form period-2 exponent for two unit spheres with gap 2
LOG_3_2SQRT2 = math.log(3 + 2 * math.sqrt(2))


def kstar(kappa, d, a=None):
    """Fixed point of k -> k/(1 + d k) + 2a (a = kappa at normal incidence)."""
    a = kappa if a is None else a
    return a + math.sqrt(a * a + 2 * a / d)


@pytest.fixture(scope="session")
def two_spheres():
    return presets.two_spheres()


@pytest.fixture(scope="session")
def equilateral():
    return presets.equilateral_spheres()


@pytest.fixture(scope="session")
def asymmetric():
    return presets.asymmetric_spheres()


@pytest.fixture(scope="session")
def shipped_orbits():
    out = {}
    for name, (build, codings) in presets.SCENES.items():
        scene = build()
        for c in codings:
            out[(name, c)] = find_periodic_orbit(scene, c)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
