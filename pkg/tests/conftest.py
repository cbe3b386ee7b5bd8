import numpy as np
import pytest

from cuspflow.coarse import FreeTree
from cuspflow.cusp import CuspGraph
from cuspflow.experiments import sample_graph_records
from cuspflow.groups import get_preset

SMALL_RECORD_GRAPH = ("psl2z", 12, 6)


@pytest.fixture(scope="session")
def tree():
    return FreeTree(get_preset("schottky2"))


@pytest.fixture(scope="session")
def tree_graph():
    return CuspGraph(get_preset("schottky2"), 6, 8)


@pytest.fixture(scope="session")
def modular_graph():
    return CuspGraph(get_preset("psl2z"), 10, 6)


@pytest.fixture(scope="session")
def graph_records():
    """Geodesic records on a small modular cusp graph, some with cusp crossings."""
    # runs of 10 are the shortest that still force crossings at this radius
    return sample_graph_records(30, seed=5, min_length=20, graph=SMALL_RECORD_GRAPH, min_run=10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
