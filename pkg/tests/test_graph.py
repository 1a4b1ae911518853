import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lwsampling.graph import (
    UNREACHABLE,
    Graph,
    GraphError,
    all_hop_distances,
    build_laplacian,
    gen_grid_knn,
    gen_random_geometric,
    hop_distance,
    load_graph,
    save_graph,
    set_distance,
)
from lwsampling.spectral import eigendecompose

from conftest import path_graph, random_weighted_graph


def floyd_warshall_hops(g):
    n = g.n
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0)
    for i, j, _ in g.edges():
        D[i, j] = D[j, i] = 1
    for k in range(n):
        D = np.minimum(D, D[:, [k]] + D[[k], :])
    return D


def test_laplacian_p2():
    g = Graph.from_edges(2, [(0, 1, 1.0)])
    np.testing.assert_array_equal(build_laplacian(g), [[1, -1], [-1, 1]])


def test_laplacian_triangle():
    g = Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    np.testing.assert_array_equal(build_laplacian(g), 3 * np.eye(3) - np.ones((3, 3)))


def test_laplacian_matches_edge_list(graph6):
    W = np.zeros((6, 6))
    for i, j, w in graph6.edges():
        W[i, j] += w
        W[j, i] += w
    expected = np.diag(W.sum(axis=1)) - W
    np.testing.assert_allclose(build_laplacian(graph6), expected, atol=1e-15)
    np.testing.assert_allclose(build_laplacian(graph6, sparse=True).toarray(), expected, atol=1e-15)


@pytest.mark.parametrize("g", [
    gen_random_geometric(80, 0.2, 0.1, seed=1),
    gen_grid_knn(7, 5, 4),
    random_weighted_graph(25, 0.2, seed=3),
])
def test_laplacian_invariants(g):
    L = build_laplacian(g)
    np.testing.assert_allclose(L, L.T)
    assert np.abs(L.sum(axis=1)).max() <= 1e-12
    off = L - np.diag(np.diag(L))
    assert off.max() <= 0 and np.diag(L).min() >= 0
    assert eigendecompose(L).eigenvalues[0] >= -1e-9


def test_graph_rejects_bad_edges():
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 0, 1.0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 1, 1.0), (1, 0, 2.0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 1, -1.0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 5, 1.0)])


def test_hop_distance_path():
    assert hop_distance(path_graph(4), 0, 3) == 3


def test_hop_distance_disconnected():
    g = Graph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert hop_distance(g, 0, 3) == UNREACHABLE
    assert set_distance(g, [0, 1], 2) == UNREACHABLE


def test_hop_distance_index_error():
    with pytest.raises(IndexError):
        hop_distance(path_graph(3), 0, 3)


def test_hop_distance_matches_floyd_warshall():
    g = random_weighted_graph(20, 0.12, seed=7)
    D = floyd_warshall_hops(g)
    expected = np.where(np.isfinite(D), D, UNREACHABLE).astype(int)
    np.testing.assert_array_equal(all_hop_distances(g), expected)
    for i in range(g.n):
        for j in range(g.n):
            assert hop_distance(g, i, j) == expected[i, j]


def test_set_distance_examples():
    g = path_graph(5)
    assert set_distance(g, [2, 4], 2) == 0
    assert set_distance(g, [0], 3) == 3
    with pytest.raises(GraphError):
        set_distance(g, [], 1)


def test_set_distance_matches_loop():
    g = random_weighted_graph(30, 0.1, seed=9)
    rng = np.random.default_rng(0)
    for _ in range(20):
        S = rng.choice(30, size=rng.integers(1, 5), replace=False).tolist()
        i = int(rng.integers(30))
        per = [hop_distance(g, u, i) for u in S]
        reach = [d for d in per if d != UNREACHABLE]
        assert set_distance(g, S, i) == (min(reach) if reach else UNREACHABLE)


@settings(max_examples=25, deadline=None)
@given(st.integers(5, 25), st.floats(0.05, 0.4), st.integers(0, 10_000))
def test_hop_distance_is_metric(n, p, seed):
    g = random_weighted_graph(n, p, seed)
    D = all_hop_distances(g)
    assert np.all(np.diag(D) == 0)
    np.testing.assert_array_equal(D, D.T)
    R = np.where(D == UNREACHABLE, np.inf, D)
    for k in range(n):
        via = R[:, [k]] + R[[k], :]
        assert np.all(R <= via)


def test_random_geometric_basic():
    g = gen_random_geometric(600, 0.1, 0.05, seed=0)
    assert g.n == 600 and g.coords.shape == (600, 2)
    assert gen_random_geometric(1, 0.5, 0.2, seed=0).num_edges == 0


def test_random_geometric_edges_follow_rule():
    g = gen_random_geometric(50, 0.3, 0.05, weight_floor=1e-3, seed=2)
    xy = g.coords
    got = {(i, j): w for i, j, w in g.edges()}
    for i in range(50):
        for j in range(i + 1, 50):
            d = np.linalg.norm(xy[i] - xy[j])
            w = np.exp(-d * d / (2 * 0.05**2))
            if d < 0.3 and w >= 1e-3:
                assert got[(i, j)] == pytest.approx(w, rel=1e-12)
            else:
                assert (i, j) not in got


def test_random_geometric_deterministic():
    a = gen_random_geometric(100, 0.2, 0.1, seed=5)
    b = gen_random_geometric(100, 0.2, 0.1, seed=5)
    assert a.edges() == b.edges()
    assert a.edges() != gen_random_geometric(100, 0.2, 0.1, seed=6).edges()


def test_grid_knn_sizes():
    assert gen_grid_knn(2, 1, 1).edges() == [(0, 1, 1.0)]
    with pytest.raises(GraphError):
        gen_grid_knn(2, 2, 4)


def test_grid_knn_256_square():
    g = gen_grid_knn(256, 256, 10)
    assert g.n == 65536
    assert g.degrees().min() >= 10


def brute_knn(width, height, k):
    n = width * height
    r, c = np.divmod(np.arange(n), width)
    chosen = []
    for v in range(n):
        d2 = (r - r[v]) ** 2 + (c - c[v]) ** 2
        cand = sorted((d2[u], u) for u in range(n) if u != v)
        chosen.append([u for _, u in cand[:k]])
    return chosen


@pytest.mark.parametrize("w,h,k", [(4, 4, 3), (5, 3, 6), (6, 6, 10)])
def test_grid_knn_matches_brute_force(w, h, k):
    g = gen_grid_knn(w, h, k)
    expected = set()
    for v, nbrs in enumerate(brute_knn(w, h, k)):
        for u in nbrs:
            expected.add((min(u, v), max(u, v)))
    assert {(i, j) for i, j, _ in g.edges()} == expected


def test_edge_list_round_trip(tmp_path):
    g = random_weighted_graph(15, 0.3, seed=1)
    path = tmp_path / "g.txt"
    save_graph(g, path)
    back = load_graph(path)
    assert back.n == g.n
    assert back.edges() == g.edges()
    assert path.read_text().splitlines()[0] == "n 15"
