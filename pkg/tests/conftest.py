import numpy as np
import pytest

from src.fem import assemble, build_mesh
from src.problems import build_example1, build_quadratic


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def ops8():
    return assemble(build_mesh(8))


@pytest.fixture(scope="session")
def ops16():
    return assemble(build_mesh(16))


@pytest.fixture(scope="session")
def example1_coarse():
    return build_example1(8, 1e-4)


@pytest.fixture(scope="session")
def quadratic8():
    return build_quadratic(8)
