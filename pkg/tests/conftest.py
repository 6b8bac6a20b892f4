import functools

import pytest
from hypothesis import settings

from hyperlab.geometry.teichmuller import fn_point
from hyperlab.meshing.surface import mesh_cusped, mesh_surface
from hyperlab.spectral import assemble, solve_lowest

settings.register_profile("lab", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("lab")


@functools.lru_cache(maxsize=None)
def closed(decomposition, lengths, twists=None, h=0.2, k=4):
    """(point, mesh, spectrum) of a closed surface, shared across tests."""
    p = fn_point(decomposition, lengths, twists)
    m = mesh_surface(p, h)
    return p, m, solve_lowest(assemble(m), k)


@functools.lru_cache(maxsize=None)
def cusped(decomposition, lengths, twists=None, h=0.1, Y=20.0, k=4):
    p = fn_point(decomposition, lengths, twists)
    m = mesh_cusped(p, Y, h)
    return p, m, solve_lowest(assemble(m), k)


@pytest.fixture
def theta2():
    return closed("theta", (2.0, 2.0, 2.0))


@pytest.fixture
def pants_pinched():
    return closed("theta", (0.1, 0.1, 0.1))


@pytest.fixture
def torus_pinched():
    return closed("dumbbell", (2.0, 2.0, 0.1))
