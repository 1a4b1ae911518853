"""Weighted undirected graphs, generators, Laplacians and hop distances.

Vertices are 0-based everywhere in the Python API. Only the plain-text
edge-list format uses 1-based labels.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

# Marker for vertex pairs with no connecting path. Kept distinct from every
# valid hop count so comparisons against a hop radius are never accidental.
UNREACHABLE = -1


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with strictly positive edge weights.

    Edges are stored once with ``rows[e] < cols[e]``.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    coords: np.ndarray | None = None
    _csr: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        w = np.asarray(self.weights, dtype=float)
        if not (rows.shape == cols.shape == w.shape) or rows.ndim != 1:
            raise GraphError("rows, cols and weights must be 1-d arrays of equal length")
        if self.n < 1:
            raise GraphError("graph needs at least one vertex")
        if rows.size:
            if np.any(rows >= cols):
                raise GraphError("edges must satisfy i < j (no self-loops)")
            if rows.min() < 0 or cols.max() >= self.n:
                raise GraphError("edge endpoint out of range")
            if np.any(~(w > 0)) or not np.all(np.isfinite(w)):
                raise GraphError("edge weights must be finite and strictly positive")
            keys = rows * self.n + cols
            if np.unique(keys).size != keys.size:
                raise GraphError("duplicate edge")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_edges(cls, n, edges, coords=None):
        """Build from an iterable of ``(i, j, w)`` triples in any orientation."""
        edges = list(edges)
        if not edges:
            return cls(n, np.zeros(0, int), np.zeros(0, int), np.zeros(0), coords)
        arr = np.asarray(edges, dtype=float)
        i = arr[:, 0].astype(np.int64)
        j = arr[:, 1].astype(np.int64)
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        order = np.lexsort((hi, lo))
        return cls(n, lo[order], hi[order], arr[order, 2], coords)

    @property
    def num_edges(self):
        return int(self.rows.size)

    def edges(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()))

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric weighted adjacency in CSR form (cached)."""
        if self._csr is None:
            r = np.concatenate([self.rows, self.cols])
            c = np.concatenate([self.cols, self.rows])
            w = np.concatenate([self.weights, self.weights])
            A = sp.csr_matrix((w, (r, c)), shape=(self.n, self.n))
            A.sort_indices()
            object.__setattr__(self, "_csr", A)
        return self._csr

    def neighbors(self, i):
        A = self.adjacency()
        return A.indices[A.indptr[i]:A.indptr[i + 1]]

    def degrees(self):
        return np.asarray(self.adjacency().sum(axis=1)).ravel()


def build_laplacian(g: Graph, sparse=False):
    """Combinatorial Laplacian ``L = D - W``.

    Dense by default; ``sparse=True`` returns CSR, which is what the
    Chebyshev filters want on larger graphs.
    """
    W = g.adjacency()
    D = sp.diags(np.asarray(W.sum(axis=1)).ravel())
    L = (D - W).tocsr()
    if sparse:
        return L
    return L.toarray()


def _check_vertex(g, i):
    if not 0 <= i < g.n:
        raise IndexError(f"vertex {i} out of range for graph with {g.n} vertices")


def bfs_distances(g: Graph, source, max_hops=None):
    """Hop counts from ``source``; UNREACHABLE beyond the component or ``max_hops``."""
    _check_vertex(g, source)
    A = g.adjacency()
    indptr, indices = A.indptr, A.indices
    dist = np.full(g.n, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u]
        if max_hops is not None and du >= max_hops:
            continue
        for v in indices[indptr[u]:indptr[u + 1]]:
            if dist[v] == UNREACHABLE:
                dist[v] = du + 1
                queue.append(v)
    return dist


def hop_distance(g: Graph, i, j):
    """Number of edges on a shortest path between ``i`` and ``j``, ignoring weights."""
    _check_vertex(g, j)
    return int(bfs_distances(g, i)[j])


def all_hop_distances(g: Graph):
    """n x n matrix of hop counts, UNREACHABLE for disconnected pairs."""
    D = shortest_path(g.adjacency(), method="D", directed=False, unweighted=True)
    out = np.full(D.shape, UNREACHABLE, dtype=np.int64)
    finite = np.isfinite(D)
    out[finite] = np.rint(D[finite]).astype(np.int64)
    return out


def set_distance(g: Graph, S, i):
    """Smallest hop count from any vertex of ``S`` to ``i``."""
    S = list(S)
    if not S:
        raise GraphError("vertex set must be nonempty")
    _check_vertex(g, i)
    # distances are symmetric, so a single BFS from i suffices
    dist = bfs_distances(g, i)[S]
    reach = dist[dist != UNREACHABLE]
    return int(reach.min()) if reach.size else UNREACHABLE


def gen_random_geometric(n, radius, kernel_sigma, weight_floor=1e-6, seed=0):
    """Random geometric graph on the unit square with Gaussian edge weights.

    Points are drawn uniformly; vertices closer than ``radius`` are joined
    with weight ``exp(-d^2 / (2 sigma^2))`` unless that weight falls below
    ``weight_floor``.
    """
    if n < 1:
        raise GraphError("n must be at least 1")
    if radius <= 0 or kernel_sigma <= 0:
        raise GraphError("radius and kernel_sigma must be positive")
    rng = np.random.default_rng(seed)
    xy = rng.random((n, 2))
    diff = xy[:, None, :] - xy[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    i, j = np.nonzero(np.triu(d2 < radius * radius, k=1))
    w = np.exp(-d2[i, j] / (2.0 * kernel_sigma**2))
    keep = w >= weight_floor
    return Graph(n, i[keep], j[keep], w[keep], coords=xy)


def _sorted_offsets(radius):
    r = int(np.ceil(radius))
    dr, dc = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    dr, dc = dr.ravel(), dc.ravel()
    d2 = dr * dr + dc * dc
    keep = (d2 > 0) & (d2 <= radius * radius)
    dr, dc, d2 = dr[keep], dc[keep], d2[keep]
    # (d2, dr, dc) order == (distance, vertex index) order for row-major pixels
    order = np.lexsort((dc, dr, d2))
    return dr[order], dc[order]


def gen_grid_knn(width, height, k_nn):
    """Pixel grid joined to each pixel's ``k_nn`` nearest pixels, unit weights.

    Vertices are pixels in row-major order (``index = row * width + col``).
    Equidistant candidates are taken in ascending vertex index and the
    directed selections are symmetrised by union.
    """
    n = width * height
    if width < 1 or height < 1 or k_nn < 1 or n < k_nn + 1:
        raise GraphError(f"a {width}x{height} grid cannot host {k_nn} neighbours per pixel")
    r, c = np.divmod(np.arange(n), width)
    radius = np.sqrt(4.0 * (k_nn + 1) / np.pi) + 2.0
    while True:
        dr, dc = _sorted_offsets(radius)
        count = np.zeros(n, dtype=np.int64)
        src, dst = [], []
        for a, b in zip(dr, dc):
            rr, cc = r + a, c + b
            ok = (rr >= 0) & (rr < height) & (cc >= 0) & (cc < width) & (count < k_nn)
            idx = np.nonzero(ok)[0]
            src.append(idx)
            dst.append(rr[idx] * width + cc[idx])
            count[idx] += 1
        if count.min() >= k_nn:
            break
        # every candidate inside the disc was consumed: widen and redo
        radius *= 1.5
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    keys = np.unique(np.minimum(src, dst) * n + np.maximum(src, dst))
    lo, hi = np.divmod(keys, n)
    coords = np.column_stack([c, r]).astype(float)
    return Graph(n, lo, hi, np.ones(lo.size), coords=coords)


def save_graph(g: Graph, path):
    with open(path, "w") as fh:
        fh.write(f"n {g.n}\n")
        for i, j, w in g.edges():
            fh.write(f"{i + 1} {j + 1} {w:.17g}\n")


def load_graph(path):
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or lines[0][0] != "n" or len(lines[0]) != 2:
        raise GraphError(f"{path}: first line must be 'n <count>'")
    n = int(lines[0][1])
    edges = []
    for lineno, parts in enumerate(lines[1:], start=2):
        if len(parts) != 3:
            raise GraphError(f"{path}:{lineno}: expected 'i j w'")
        edges.append((int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])))
    return Graph.from_edges(n, edges)


def save_coords(g: Graph, path):
    if g.coords is None:
        raise GraphError("graph carries no coordinates")
    with open(path, "w") as fh:
        for i, (x, y) in enumerate(g.coords):
            fh.write(f"{i + 1} {x:.17g} {y:.17g}\n")
