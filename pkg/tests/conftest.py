import numpy as np
import pytest

from pdwg.mesh import build_uniform_unit_square, classify_boundary
from pdwg.problems import get_case


def tags_for(mesh, case_name):
    return classify_boundary(mesh, list(get_case(case_name).segments))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def mesh2():
    return build_uniform_unit_square(2)


@pytest.fixture
def mesh4():
    return build_uniform_unit_square(4)
