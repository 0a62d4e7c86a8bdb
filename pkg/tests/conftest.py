import numpy as np
import pytest

from quakelab.models.lamination import EnumerationBudget
from quakelab.models.surface import PantsGraph, symmetric_base
from quakelab.services.laminations import IntersectionCache
from quakelab.services.surface_holonomy import holonomy_from_fn


@pytest.fixture(scope="session")
def topology():
    return PantsGraph.genus_two()


@pytest.fixture(scope="session")
def base():
    return symmetric_base()


@pytest.fixture(scope="session")
def base_rep(base):
    return holonomy_from_fn(base)


@pytest.fixture(scope="session")
def budget():
    return EnumerationBudget()


@pytest.fixture(scope="session")
def shared_cache():
    """Intersection counts are topological, so one cache serves every test surface."""
    return IntersectionCache()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
