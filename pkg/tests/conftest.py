import sys

import numpy as np
import pytest

from lwsampling.graph import Graph, build_laplacian, gen_random_geometric
from lwsampling.spectral import eigendecompose


def random_weighted_graph(n, p, seed):
    """Erdos-Renyi style graph with weights in (0.5, 2)."""
    rng = np.random.default_rng(seed)
    edges = [(i, j, rng.uniform(0.5, 2.0))
             for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph.from_edges(n, edges)


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1, 1.0) for i in range(n - 1)])


@pytest.fixture
def graph6():
    return random_weighted_graph(6, 0.6, seed=11)


@pytest.fixture(scope="session")
def rgg30():
    g = gen_random_geometric(30, 0.4, 0.2, seed=4)
    L = build_laplacian(g)
    return g, L, eigendecompose(L)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
