import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kwlab import ScalarField, make_torus


@pytest.fixture(scope="session")
def t2_64():
    return make_torus(2, [64, 64], [1.0, 1.0])


@pytest.fixture(scope="session")
def t2_32():
    return make_torus(2, [32, 32], [1.0, 1.0])


@pytest.fixture(scope="session")
def t2_16():
    return make_torus(2, [16, 16], [1.0, 1.0])


@pytest.fixture(scope="session")
def t4_16():
    return make_torus(4, [16, 16, 16, 16], [1.0, 1.0, 1.0, 1.0])


@pytest.fixture(scope="session")
def sin_minus_half(t2_64):
    x = t2_64.coords()
    return ScalarField(t2_64, np.broadcast_to(np.sin(2 * np.pi * x[0]) - 0.5,
                                              t2_64.sizes).copy())
