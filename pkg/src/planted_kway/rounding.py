"""Rounding embeddings to vertex sets, plus structural diagnostics of an embedding."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graph import EDGE, Graph, boundary_size, cut_size, expansion
from .sdp import EmbeddingSolution, sq_distances

INNER_RADIUS = Fraction(1, 100)
OUTER_RADIUS = Fraction(1, 50)
CLUSTER_RADIUS = Fraction(1, 400)
CLUSTER_DIAMETER = Fraction(1, 100)
CENTER_SEPARATION = Fraction(9, 10)
CLUSTER_SEPARATION = Fraction(1, 10)


class RoundingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PartitionResult:
    sets: tuple[np.ndarray, ...]
    mode: str
    n: int
    expansions: tuple[float, ...]
    provenance: tuple[dict, ...]
    completed: bool = False
    partial: bool = False
    diagnostic: str = ""
    k: int | None = None

    @property
    def sizes(self) -> list[int]:
        return [int(len(s)) for s in self.sets]

    @property
    def max_expansion(self) -> float:
        return max(self.expansions) if self.expansions else float("nan")

    def labels(self) -> np.ndarray:
        """Set index per vertex, -1 for uncovered vertices."""
        out = np.full(self.n, -1, dtype=np.int64)
        for t, s in enumerate(self.sets):
            out[s] = t
        return out


def _exact_expansion(G: Graph, mask: np.ndarray, mode: str) -> Fraction:
    size = int(mask.sum())
    count = cut_size(G, mask) if mode == EDGE else boundary_size(G, mask)
    return Fraction(count * G.n, size * (G.n - size))


def ball(sol: EmbeddingSolution, center: int, radius: float) -> np.ndarray:
    """Vertices j with |u_j - u_center|^2 <= radius."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    diff = sol.vectors - sol.vectors[center]
    return np.flatnonzero(np.einsum("ij,ij->i", diff, diff) <= radius)


def ball_around_point(sol: EmbeddingSolution, x: np.ndarray, radius: float) -> np.ndarray:
    diff = sol.vectors - np.asarray(x)[None, :]
    return np.flatnonzero(np.einsum("ij,ij->i", diff, diff) <= radius)


def candidate_radii(dist_row: np.ndarray, lo: float = float(INNER_RADIUS),
                    hi: float = float(OUTER_RADIUS)) -> np.ndarray:
    """Ball contents in [lo, hi) only change at these radii: lo itself and every distance in range."""
    inside = dist_row[(dist_row >= lo) & (dist_row < hi)]
    return np.unique(np.concatenate([[lo], inside]))


def round_greedy(sol: EmbeddingSolution, G: Graph, k: int, mode: str,
                 size_floor: float | Fraction | None = None) -> PartitionResult:
    """Greedy ball extraction.

    Each round scans every centre and every radius in [1/100, 1/50), keeps
    balls of at least ``size_floor`` vertices (default n/2k) that avoid all
    earlier picks, and takes the one of least expansion. Ties go to the
    smaller set, then the lower centre id, then the smaller radius. If a
    round has no candidate the sets found so far come back flagged partial.
    """
    n = G.n
    floor = Fraction(n, 2 * k) if size_floor is None else Fraction(size_floor)
    D = sq_distances(sol.vectors)
    covered = np.zeros(n, dtype=bool)
    sets: list[np.ndarray] = []
    exps: list[float] = []
    prov: list[dict] = []
    for t in range(k):
        best = None
        seen: dict[bytes, Fraction] = {}
        for i in range(n):
            row = D[i]
            for radius in candidate_radii(row):
                mask = row <= radius
                size = int(mask.sum())
                if size < floor or np.any(mask & covered):
                    continue
                key = mask.tobytes()
                if key not in seen:
                    # a ball covering V has no complement; it only wins when nothing else qualifies
                    seen[key] = _exact_expansion(G, mask, mode) if size < n else float("inf")
                score = (seen[key], size, i, float(radius))
                if best is None or score < best[0]:
                    best = (score, mask)
        if best is None:
            return PartitionResult(
                sets=tuple(sets), mode=mode, n=n, expansions=tuple(exps),
                provenance=tuple(prov), partial=True, k=k,
                diagnostic=(f"round {t + 1} of {k}: no ball with radius in [1/100, 1/50), "
                            f"at least {float(floor):g} vertices and disjoint from earlier "
                            "picks; the embedding is not clustered"),
            )
        (value, _, center, radius), mask = best
        covered |= mask
        sets.append(np.flatnonzero(mask))
        exps.append(float(value))
        prov.append({"center": int(center), "radius": float(radius)})
    return PartitionResult(sets=tuple(sets), mode=mode, n=n, expansions=tuple(exps),
                           provenance=tuple(prov), k=k)


def line_embedding(sol: EmbeddingSolution, i0: int) -> np.ndarray:
    """y_i = max(0, d(i, i0) - 1/100), capped at d(R', i0) - 1/100 where R' = V - B(i0, 1/50)."""
    diff = sol.vectors - sol.vectors[i0]
    d0 = np.einsum("ij,ij->i", diff, diff)
    lo, hi = float(INNER_RADIUS), float(OUTER_RADIUS)
    y = np.maximum(0.0, d0 - lo)
    far = d0 > hi
    if np.any(far):
        y[far] = d0[far].min() - lo
    return y


def threshold_cut_l1(sol: EmbeddingSolution, G: Graph, i0: int, mode: str) -> tuple[np.ndarray, float]:
    """Best threshold cut W = {i : y_i <= t} of the line embedding around ``i0``.

    Thresholds range over the distinct y values not exceeding 1/50; among cuts
    with both sides nonempty the least expansion wins, ties going to smaller W.
    """
    y = line_embedding(sol, i0)
    values = np.unique(y)
    if len(values) < 2:
        raise RoundingError(f"line embedding around {i0} is constant; no nontrivial threshold")
    best = None
    for t in values[values <= float(OUTER_RADIUS)]:
        mask = y <= t
        size = int(mask.sum())
        if size == 0 or size == G.n:
            continue
        score = (_exact_expansion(G, mask, mode), size)
        if best is None or score < best[0]:
            best = (score, mask)
    if best is None:
        raise RoundingError(f"no threshold <= 1/50 around {i0} gives a nontrivial cut")
    (value, _), mask = best
    return np.flatnonzero(mask), float(value)


def complete_partition(result: PartitionResult, G: Graph, mode: str | None = None) -> PartitionResult:
    """Keep the first k-1 sets and replace the last by the complement of their union."""
    mode = mode or result.mode
    if result.partial or len(result.sets) < 2:
        raise RoundingError(f"need k >= 2 disjoint sets, got {len(result.sets)}"
                            + (" (partial result)" if result.partial else ""))
    head = result.sets[:-1]
    covered = np.zeros(G.n, dtype=bool)
    for s in head:
        covered[s] = True
    last = np.flatnonzero(~covered)
    if len(last) == 0:
        raise RoundingError("the first k-1 sets cover V; complement is empty")
    if len(last) < len(result.sets[-1]):
        raise RoundingError("complement is smaller than the set it replaces; sets overlap")
    sets = tuple(head) + (last,)
    exps = tuple(float(expansion(G, s, mode)) if 0 < len(s) < G.n else float("inf") for s in sets)
    prov = tuple(result.provenance[:-1]) + ({"complement_of": list(range(len(head)))},)
    return PartitionResult(sets=sets, mode=mode, n=G.n, expansions=exps, provenance=prov,
                           completed=True, k=result.k)


# -- diagnostics -----------------------------------------------------------

@dataclass
class DiagnosticsReport:
    bound: float
    centroids: np.ndarray
    deviations: list[float]
    centroid_norms: list[float]
    inner_products: np.ndarray
    centroid_distances: np.ndarray
    cluster_sizes: list[int]
    cluster_overlap: list[int]
    cluster_diameters: list[float]
    cluster_gaps: np.ndarray
    size_floor: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def flat(self) -> dict:
        """Flat key/value view; NaN/inf never appear (empty clusters report -1)."""
        k = len(self.deviations)
        out: dict = {"bound": self.bound, "size_floor": self.size_floor}
        for t in range(k):
            out[f"deviation_{t}"] = self.deviations[t]
            out[f"centroid_norm_{t}"] = self.centroid_norms[t]
            out[f"cluster_size_{t}"] = self.cluster_sizes[t]
            out[f"cluster_overlap_{t}"] = self.cluster_overlap[t]
            out[f"cluster_diameter_{t}"] = self.cluster_diameters[t]
        for a in range(k):
            for b in range(a + 1, k):
                out[f"inner_product_{a}_{b}"] = float(self.inner_products[a, b])
                out[f"centroid_distance_{a}_{b}"] = float(self.centroid_distances[a, b])
                gap = float(self.cluster_gaps[a, b])
                out[f"cluster_gap_{a}_{b}"] = gap if np.isfinite(gap) else -1.0
        for name, ok in self.checks.items():
            out[f"check_{name}"] = bool(ok)
        out["passed"] = self.passed
        return out


def cluster_diagnostics(sol: EmbeddingSolution, inst, lam: float | None = None,
                        slack: float = 0.0) -> DiagnosticsReport:
    """Centroid concentration/separation statistics against the planted parts.

    The bound k*eps*r^3/lambda uses the smallest measured pre-adversary block
    gap unless ``lam`` is given. ``slack`` is added to every threshold.
    """
    p = inst.params
    lam = min(inst.achieved_lambda) if lam is None else lam
    bound = inst.k * p.eps * p.r ** 3 / lam
    X = sol.vectors
    n, k = X.shape[0], inst.k
    mu = np.array([X[part].mean(axis=0) for part in inst.parts])
    dev = [float(np.mean(np.sum((X[part] - mu[t]) ** 2, axis=1))) for t, part in enumerate(inst.parts)]
    norms = [float(mu[t] @ mu[t]) for t in range(k)]
    ip = mu @ mu.T
    cd = sq_distances(mu)
    D = sq_distances(X)
    clusters = [ball_around_point(sol, mu[t], float(CLUSTER_RADIUS)) for t in range(k)]
    labels = inst.labels
    overlap = [int(np.count_nonzero(labels[c] == t)) for t, c in enumerate(clusters)]
    diam = [float(D[np.ix_(c, c)].max()) if len(c) else 0.0 for c in clusters]
    gaps = np.full((k, k), np.inf)
    for a in range(k):
        for b in range(k):
            if a != b and len(clusters[a]) and len(clusters[b]):
                gaps[a, b] = D[np.ix_(clusters[a], clusters[b])].min()
    floor = n / (2 * k)
    off = ~np.eye(k, dtype=bool)
    checks = {
        "a_deviation": all(v <= bound + slack for v in dev),
        "b_centroid_norm": all(v >= 1 - bound - slack for v in norms),
        "c_inner_product": bool(np.all(ip[off] <= bound + slack)),
        "d_centroid_distance": bool(np.all(cd[off] >= float(CENTER_SEPARATION) - slack)),
        "e_cluster_overlap": all(v >= floor for v in overlap),
        "f_cluster_gap": bool(np.all(gaps[off] >= float(CLUSTER_SEPARATION) - slack)),
    }
    return DiagnosticsReport(
        bound=bound, centroids=mu, deviations=dev, centroid_norms=norms, inner_products=ip,
        centroid_distances=cd, cluster_sizes=[len(c) for c in clusters], cluster_overlap=overlap,
        cluster_diameters=diam, cluster_gaps=gaps, size_floor=floor, checks=checks,
    )


def centroid_identity_check(points: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Both sides of (1/N^2) sum_{i<j} |x_i - x_j|^2 = mean_i |mu - x_i|^2."""
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    N = X.shape[0]
    if N == 0:
        raise ValueError("need at least one point")
    D = sq_distances(X)
    lhs = float(np.triu(D, 1).sum()) / N ** 2
    mu = X.mean(axis=0)
    rhs = float(np.mean(np.sum((X - mu) ** 2, axis=1)))
    return lhs, rhs


def poincare_check(G: Graph, X: Sequence[float], lam: float, d: float, r: float) -> tuple[float, float, float]:
    """Edge energy of X against the expander lower bound under both pair conventions.

    Returns (sum over edges, bound summing ordered pairs, bound summing unordered pairs).
    """
    X = np.asarray(X, dtype=np.float64)
    n = G.n
    e = G.edges
    lhs = float(np.sum((X[e[:, 0]] - X[e[:, 1]]) ** 2))
    centred = X - X.mean()
    unordered = n * float(centred @ centred)
    scale = lam * d / (n * r ** 2)
    return lhs, scale * 2 * unordered, scale * unordered


def spread(sol: EmbeddingSolution) -> float:
    """sum over ordered pairs of |u_i - u_j|^2; equals 2n^2(1 - 1/k) under exact unit norms and row sums."""
    X = sol.vectors
    sq = np.einsum("ij,ij->i", X, X)
    total = X.sum(axis=0)
    n = X.shape[0]
    return float(2 * n * sq.sum() - 2 * total @ total)


def largest_ball(sol: EmbeddingSolution, radius: float = float(OUTER_RADIUS)) -> int:
    """max_i |B(i, radius)|; at most 9n/10 at radius 1/50 for feasible embeddings."""
    D = sq_distances(sol.vectors)
    return int((D <= radius).sum(axis=1).max())
