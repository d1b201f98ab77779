"""Undirected simple graphs, cut boundaries and expansion metrics.

Vertices are dense integer ids ``0..n-1``. A :class:`Graph` is immutable once
built and can be shared freely between readers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

EDGE = "edge"
VERTEX = "vertex"
MODES = (EDGE, VERTEX)

DENSE_EIGEN_MAX_N = 2000
EIGEN_RESIDUAL_TOL = 1e-8


class GraphError(ValueError):
    """Raised for malformed graphs or invalid vertex sets."""


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    edges: np.ndarray  # (m, 2) int64, rows (u, v) with u < v, lexicographically sorted
    adjacency: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def min_degree(self) -> int:
        return int(self.degrees.min()) if self.n else 0

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    @cached_property
    def adjacency_matrix(self) -> sp.csr_matrix:
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        data = np.ones(len(rows), dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def neighbors(self, i: int) -> np.ndarray:
        return self.adjacency[i]

    def induced_subgraph(self, vertices: Sequence[int]) -> "Graph":
        """Subgraph on ``vertices``, relabelled to ``0..len(vertices)-1`` in the given order."""
        vertices = [int(v) for v in vertices]
        index = {v: t for t, v in enumerate(vertices)}
        sub = [
            (index[u], index[v])
            for u, v in self.edges.tolist()
            if u in index and v in index
        ]
        return build_graph(len(vertices), sub)

    def with_edges(self, extra: Iterable[tuple[int, int]]) -> "Graph":
        return build_graph(self.n, list(map(tuple, self.edges.tolist())) + list(extra))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.edges.tobytes()))


def build_graph(n: int, edge_list: Iterable[Sequence[int]]) -> Graph:
    """Canonicalize an edge list into a :class:`Graph`.

    Raises :class:`GraphError` naming the offending pair for an out-of-range
    endpoint, a self-loop or a duplicate edge.
    """
    if n < 0:
        raise GraphError(f"vertex count must be nonnegative, got {n}")
    seen: set[tuple[int, int]] = set()
    for pair in edge_list:
        u, v = (int(x) for x in pair)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"endpoint out of range [0, {n}) in edge ({u}, {v})")
        if u == v:
            raise GraphError(f"self-loop at vertex {u}: ({u}, {v})")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise GraphError(f"duplicate edge ({u}, {v})")
        seen.add(key)
    edges = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges.tolist():
        nbrs[u].append(v)
        nbrs[v].append(u)
    adjacency = tuple(np.array(sorted(a), dtype=np.int64) for a in nbrs)
    return Graph(n=n, edges=edges, adjacency=adjacency)


def vertex_set(G: Graph, S: Iterable[int]) -> np.ndarray:
    """Validate ``S`` against ``G`` and return its sorted member array."""
    members = np.array(sorted(int(s) for s in S), dtype=np.int64)
    if len(members) and (members[0] < 0 or members[-1] >= G.n):
        raise GraphError(f"vertex ids must lie in [0, {G.n})")
    if len(np.unique(members)) != len(members):
        raise GraphError("vertex set contains duplicates")
    return members


def _mask(G: Graph, S: Iterable[int] | np.ndarray) -> np.ndarray:
    """Boolean membership mask of a nonempty proper subset of V."""
    if isinstance(S, np.ndarray) and S.dtype == bool:
        mask = S
        if mask.shape != (G.n,):
            raise GraphError("membership mask has wrong length")
    else:
        mask = np.zeros(G.n, dtype=bool)
        mask[vertex_set(G, S)] = True
    size = int(mask.sum())
    if size == 0:
        raise GraphError("vertex set is empty")
    if size == G.n:
        raise GraphError("vertex set equals V; complement is empty")
    return mask


def edge_boundary(G: Graph, S) -> set[tuple[int, int]]:
    """Edges with exactly one endpoint in ``S``."""
    mask = _mask(G, S)
    cross = mask[G.edges[:, 0]] != mask[G.edges[:, 1]]
    return {(int(u), int(v)) for u, v in G.edges[cross]}


def vertex_boundary(G: Graph, S) -> np.ndarray:
    """Symmetric vertex boundary N(S) ∪ N(V∖S), sorted."""
    return np.flatnonzero(_boundary_mask(G, _mask(G, S)))


def _boundary_mask(G: Graph, mask: np.ndarray) -> np.ndarray:
    cross = mask[G.edges[:, 0]] != mask[G.edges[:, 1]]
    out = np.zeros(G.n, dtype=bool)
    out[G.edges[cross].ravel()] = True
    return out


def cut_size(G: Graph, mask: np.ndarray) -> int:
    return int(np.count_nonzero(mask[G.edges[:, 0]] != mask[G.edges[:, 1]]))


def boundary_size(G: Graph, mask: np.ndarray) -> int:
    return int(np.count_nonzero(_boundary_mask(G, mask)))


def _ratio(count: int, size: int, n: int, exact: bool) -> float | Fraction:
    if exact:
        return Fraction(count * n, size * (n - size))
    return count * n / (size * (n - size))


def edge_expansion(G: Graph, S, exact: bool = False) -> float | Fraction:
    """|E(S, V∖S)| · |V| / (|S| · |V∖S|)."""
    mask = _mask(G, S)
    return _ratio(cut_size(G, mask), int(mask.sum()), G.n, exact)


def vertex_expansion(G: Graph, S, exact: bool = False) -> float | Fraction:
    """|N(S) ∪ N(V∖S)| · |V| / (|S| · |V∖S|)."""
    mask = _mask(G, S)
    return _ratio(boundary_size(G, mask), int(mask.sum()), G.n, exact)


def expansion(G: Graph, S, mode: str, exact: bool = False) -> float | Fraction:
    if mode == EDGE:
        return edge_expansion(G, S, exact)
    if mode == VERTEX:
        return vertex_expansion(G, S, exact)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def kway_expansion(
    G: Graph, parts: Sequence[Iterable[int]], mode: str, exact: bool = False
) -> tuple[float | Fraction, list[float | Fraction]]:
    """Max over parts of the per-part expansion, plus the per-part values."""
    masks = [_mask(G, p) for p in parts]
    if not masks:
        raise GraphError("no parts given")
    total = np.sum(masks, axis=0)
    if np.any(total > 1):
        raise GraphError(f"parts overlap at vertices {np.flatnonzero(total > 1).tolist()}")
    values = [expansion(G, m, mode, exact) for m in masks]
    return max(values), values


@dataclass(frozen=True)
class SpectralReport:
    lambda2: float
    method: str
    residual: float


def normalized_laplacian(G: Graph) -> sp.csr_matrix:
    deg = G.degrees.astype(np.float64)
    if np.any(deg == 0):
        raise GraphError(f"isolated vertex {int(np.flatnonzero(deg == 0)[0])}")
    inv_sqrt = sp.diags(1.0 / np.sqrt(deg))
    return (sp.identity(G.n, format="csr") - inv_sqrt @ G.adjacency_matrix @ inv_sqrt).tocsr()


def spectral_gap(G: Graph, dense_max_n: int = DENSE_EIGEN_MAX_N) -> SpectralReport:
    """Second-smallest eigenvalue of I - D^{-1/2} A D^{-1/2}.

    Dense symmetric eigendecomposition up to ``dense_max_n`` vertices, Lanczos
    (``eigsh``) on the normalized adjacency above that.
    """
    if G.n < 2:
        raise GraphError("spectral gap needs at least two vertices")
    L = normalized_laplacian(G)
    if G.n <= dense_max_n:
        vals, vecs = np.linalg.eigh(L.toarray())
        lam, vec, method = float(vals[1]), vecs[:, 1], "dense"
    else:
        M = sp.identity(G.n, format="csr") - L
        v0 = np.sqrt(G.degrees.astype(np.float64)) + np.linspace(0.0, 1.0, G.n)
        vals, vecs = spla.eigsh(M, k=2, which="LA", v0=v0, tol=1e-12, maxiter=20 * G.n)
        order = np.argsort(vals)[::-1]
        lam, vec, method = float(1.0 - vals[order[1]]), vecs[:, order[1]], "lanczos"
    residual = float(np.linalg.norm(L @ vec - lam * vec))
    if residual > EIGEN_RESIDUAL_TOL:
        raise ArithmeticError(f"eigen residual {residual:.3e} exceeds {EIGEN_RESIDUAL_TOL}")
    return SpectralReport(lambda2=lam, method=method, residual=residual)


# -- edge-list text format -------------------------------------------------

def format_edge_list(G: Graph) -> str:
    lines = [f"{G.n} {G.m}"] + [f"{u} {v}" for u, v in G.edges.tolist()]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    """Parse the "n m" header plus m "u v" lines; blank lines are ignored, errors name the file line."""
    rows = [(no, ln.split()) for no, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not rows:
        raise GraphError("empty edge-list text")
    head_no, head = rows[0]
    try:
        n, m = (int(x) for x in head)
    except ValueError as exc:
        raise GraphError(f"line {head_no}: expected 'n m', got {' '.join(head)!r}") from exc
    if len(rows) - 1 != m:
        raise GraphError(f"header declares {m} edges but {len(rows) - 1} follow")
    pairs = []
    for lineno, row in rows[1:]:
        try:
            if len(row) != 2:
                raise ValueError
            pairs.append((int(row[0]), int(row[1])))
        except ValueError as exc:
            raise GraphError(f"line {lineno}: expected 'u v', got {' '.join(row)!r}") from exc
    return build_graph(n, pairs)
