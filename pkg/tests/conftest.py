import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from conspde import Grid, build_basis, eval_constants, preset

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid32():
    return Grid(1, 32)


@pytest.fixture(scope="session")
def basis1():
    return build_basis(1, 4)


@pytest.fixture(scope="session")
def dk32(grid32, basis1):
    F1 = eval_constants(basis1, grid32).F1
    return preset("dean_kawasaki", epsilon=0.01, F1=F1)


def cosine(grid, a=0.5, k=1, phase=0.0):
    return 1.0 + a * np.cos(2 * np.pi * k * grid.centers[0] + phase)
