import numpy as np
import pytest

from multibang.sets import ConcentricSet, RadialSet


@pytest.fixture(scope="session")
def rset3():
    # magnitude 1, phases -pi, -pi/3, pi/3 (canonicalized to [0, 2pi))
    return RadialSet(1.0, [-np.pi, -np.pi / 3, np.pi / 3])


@pytest.fixture(scope="session")
def rset6():
    return RadialSet(1.0, [-np.pi, -2 * np.pi / 3, -np.pi / 3, 0.0, np.pi / 3, 2 * np.pi / 3])


@pytest.fixture(scope="session")
def cset():
    return ConcentricSet()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
