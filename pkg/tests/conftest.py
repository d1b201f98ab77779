import numpy as np
import pytest

from planted_kway.graph import build_graph
from planted_kway.planted import PlantedParams, generate


def cycle(n):
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n):
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def two_triangles():
    return build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])


def disjoint_k4s():
    edges = []
    for b in range(3):
        o = 4 * b
        edges += [(o + i, o + j) for i in range(4) for j in range(i + 1, 4)]
    return build_graph(12, edges)


def random_graph(n, p, rng):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return build_graph(n, list(zip(iu[keep].tolist(), ju[keep].tolist())))


@pytest.fixture
def k4s_instance():
    # n=12, k=3, d=3 forces each block to be K4
    return generate(PlantedParams(n=12, k=3, eps=0.0, lambda_min=1.2, d=3, seed=0), "edge")


@pytest.fixture
def bridge_instance():
    """Two triangles joined by the bridge (2, 3), as a planted instance with parts the triangles."""
    from planted_kway.planted import PlantedInstance

    G = two_triangles()
    params = PlantedParams(n=6, k=2, eps=0.5, lambda_min=1.0, d=2)
    parts = (np.array([0, 1, 2]), np.array([3, 4, 5]))
    return PlantedInstance(graph=G, parts=parts, params=params, mode="edge",
                           achieved_lambda=(1.5, 1.5), cross_edges=((2, 3),))
