import pytest

from layerflow.geometry import GridSpec
from layerflow.corpus import divergence_free_velocity, random_field


@pytest.fixture(scope="session")
def grid2():
    """2-D grid with enough spectral headroom for 1e-10 identity tests."""
    return GridSpec(n=2, N=64, L=6.0, M=16, T=0.5)


@pytest.fixture(scope="session")
def grid2_coarse():
    return GridSpec(n=2, N=32, L=6.0, M=8, T=0.5)


@pytest.fixture(scope="session")
def grid3():
    """3-D grid resolving products of corpus fields."""
    return GridSpec(n=3, N=64, L=6.0, M=8, T=0.5)


@pytest.fixture(scope="session")
def grid3_coarse():
    return GridSpec(n=3, N=32, L=6.0, M=8, T=0.5)


def corpus_fields(grid, degrees=(0, 1), seeds=(0, 1), time_dependent=False, **kw):
    out = []
    for q in degrees:
        for s in seeds:
            out.append(random_field(grid, q, seed=100 * q + s, time_dependent=time_dependent, **kw))
    return out


@pytest.fixture(scope="session")
def divfree2(grid2):
    return divergence_free_velocity(grid2, 7)


@pytest.fixture(scope="session")
def divfree2_td(grid2):
    return divergence_free_velocity(grid2, 8, time_dependent=True)
