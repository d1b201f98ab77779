"""Planted k-way instances: expander blocks, sparse cross structure, monotone adversary."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph import (
    EDGE,
    VERTEX,
    Graph,
    build_graph,
    cut_size,
    boundary_size,
    edge_expansion,
    spectral_gap,
    vertex_expansion,
)

PREMISE_BOUND = Fraction(1, 800)
EXPANDER_RETRIES = 50


class ExpanderGenerationError(RuntimeError):
    """No graph meeting the spectral-gap target was found within the retry budget."""


class AdversaryError(ValueError):
    """An adversary policy tried to add an edge between different planted parts."""


@dataclass(frozen=True)
class AdversaryPolicy:
    """Monotone adversary behaviour.

    kind is one of ``none``, ``random_intra`` (``count`` random intra-part
    edges), ``clique_within_part`` (a clique on ``size`` vertices of part
    ``part``, 0-based) or ``explicit`` (the listed ``edges``).
    """

    kind: str = "none"
    count: int = 0
    part: int = 0
    size: int = 0
    edges: tuple[tuple[int, int], ...] = ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "count": self.count, "part": self.part,
                "size": self.size, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "AdversaryPolicy":
        return cls(kind=data.get("kind", "none"), count=int(data.get("count", 0)),
                   part=int(data.get("part", 0)), size=int(data.get("size", 0)),
                   edges=tuple(tuple(int(x) for x in e) for e in data.get("edges", ())))


NO_ADVERSARY = AdversaryPolicy()


@dataclass(frozen=True)
class PlantedParams:
    n: int
    k: int
    eps: float
    lambda_min: float
    d: int
    r: float = 1.0
    seed: int = 0
    adversary: AdversaryPolicy = NO_ADVERSARY
    # Edge mode: number of cross edges to attempt (None fills every part up to its cap).
    cross_edges: int | None = None
    # Vertex mode: "matching" (random matching across portals) or "dense" (all inter-part portal pairs).
    portal_wiring: str = "matching"

    def validate(self) -> None:
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got k={self.k}")
        if self.n % self.k:
            raise ValueError(f"n must be divisible by k, got n={self.n}, k={self.k}")
        if self.d < 3:
            raise ValueError(f"d must be at least 3, got d={self.d}")
        if self.r < 1:
            raise ValueError(f"r must be at least 1, got r={self.r}")
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got eps={self.eps}")
        if not 0 < self.lambda_min < 2:
            raise ValueError(f"lambda_min must lie in (0, 2), got {self.lambda_min}")
        if self.d >= self.n // self.k:
            raise ValueError(f"d={self.d} must be smaller than the part size {self.n // self.k}")
        if self.portal_wiring not in ("matching", "dense"):
            raise ValueError(f"unknown portal wiring {self.portal_wiring!r}")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["adversary"] = self.adversary.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PlantedParams":
        data = dict(data)
        data["adversary"] = AdversaryPolicy.from_dict(data.get("adversary") or {})
        return cls(**data)


@dataclass(frozen=True, eq=False)
class PlantedInstance:
    graph: Graph
    parts: tuple[np.ndarray, ...]
    params: PlantedParams
    mode: str
    achieved_lambda: tuple[float, ...]
    t_sets: tuple[np.ndarray, ...] | None = None
    cross_edges: tuple[tuple[int, int], ...] = ()
    adversary_edges: tuple[tuple[int, int], ...] = ()

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def labels(self) -> np.ndarray:
        out = np.empty(self.graph.n, dtype=np.int64)
        for t, part in enumerate(self.parts):
            out[part] = t
        return out

    @property
    def base_graph(self) -> Graph:
        """The graph before monotone-adversary edges were added."""
        if not self.adversary_edges:
            return self.graph
        drop = set(self.adversary_edges)
        return build_graph(self.graph.n, [e for e in self.graph.edge_set() if e not in drop])


# -- random regular expanders ---------------------------------------------

def _random_regular_edges(m: int, d: int, rng: np.random.Generator) -> set[tuple[int, int]] | None:
    """One attempt at a uniform-ish simple d-regular graph (pairing model with repair)."""
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(m), d)
    while len(stubs):
        rng.shuffle(stubs)
        leftover: list[int] = []
        for a, b in stubs.reshape(-1, 2).tolist():
            key = (a, b) if a < b else (b, a)
            if a != b and key not in edges:
                edges.add(key)
            else:
                leftover.extend((a, b))
        if not leftover:
            return edges
        # dead end when every remaining stub pair is a loop or already an edge
        pending = sorted(set(leftover))
        if not any(
            (p, q) not in edges for idx, p in enumerate(pending) for q in pending[idx + 1:]
        ):
            return None
        stubs = np.array(leftover, dtype=np.int64)
    return edges


def _add_degree_slack(
    edges: set[tuple[int, int]], m: int, d: int, r: float, rng: np.random.Generator
) -> None:
    cap = math.floor(r * d)
    if cap <= d:
        return
    deg = np.full(m, d, dtype=np.int64)
    target = int((cap - d) * m / 4)
    for _ in range(20 * target):
        if target <= 0:
            break
        a, b = (int(x) for x in rng.choice(m, size=2, replace=False))
        key = (a, b) if a < b else (b, a)
        if key in edges or deg[a] >= cap or deg[b] >= cap:
            continue
        edges.add(key)
        deg[a] += 1
        deg[b] += 1
        target -= 1


def gen_regular_expander(
    m: int, d: int, lambda_min: float, r: float = 1.0, seed=None,
    retries: int = EXPANDER_RETRIES,
) -> Graph:
    """Random graph on ``m`` vertices, degrees in [d, r*d], spectral gap >= lambda_min.

    Samples d-regular graphs (plus random slack edges when r > 1) and keeps the
    first one whose measured spectral gap clears ``lambda_min``.
    """
    if (m * d) % 2:
        raise ValueError(f"m*d must be even, got m={m}, d={d}")
    if not 0 < d < m:
        raise ValueError(f"need 0 < d < m, got m={m}, d={d}")
    rng = np.random.default_rng(seed)
    best = -math.inf
    for _ in range(retries):
        edges = _random_regular_edges(m, d, rng)
        if edges is None:
            continue
        _add_degree_slack(edges, m, d, r, rng)
        G = build_graph(m, edges)
        lam = spectral_gap(G).lambda2
        if lam >= lambda_min:
            return G
        best = max(best, lam)
    raise ExpanderGenerationError(
        f"no graph with m={m}, d={d} reached spectral gap {lambda_min} in {retries} "
        f"attempts (best {best:.4f}); lambda_min is too aggressive"
    )


# -- planted instances -----------------------------------------------------

def edge_cut_cap(params: PlantedParams) -> int:
    """Largest per-part cut size keeping phi(S_t) <= eps*r*d at |S_t| = n/k."""
    n, k = params.n, params.k
    bound = Fraction(params.eps) * Fraction(params.r) * params.d * n * (k - 1) / (k * k)
    return math.floor(bound)


def vertex_boundary_cap(params: PlantedParams) -> int:
    """Largest per-part symmetric boundary keeping phi^V(S_t) <= eps*k."""
    n, k = params.n, params.k
    return math.floor(Fraction(params.eps) * n * (k - 1) / k)


def portal_budget(params: PlantedParams) -> int:
    return math.floor(Fraction(params.eps) * params.n / params.k)


def _blocks(params: PlantedParams, rng_seeds) -> tuple[list[np.ndarray], list[tuple[int, int]], list[float]]:
    size = params.n // params.k
    parts = [np.arange(t * size, (t + 1) * size, dtype=np.int64) for t in range(params.k)]
    edges: list[tuple[int, int]] = []
    lams: list[float] = []
    for t, part in enumerate(parts):
        block = gen_regular_expander(size, params.d, params.lambda_min, params.r, rng_seeds[t])
        lams.append(spectral_gap(block).lambda2)
        offset = int(part[0])
        edges.extend((u + offset, v + offset) for u, v in block.edges.tolist())
    return parts, edges, lams


def _seeds(params: PlantedParams) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(params.seed).spawn(params.k + 2)


def gen_kpart_edge(params: PlantedParams) -> PlantedInstance:
    """Sample a k-Part-edge instance.

    Cross edges join uniformly random inter-part pairs and are rejected when
    they would push either endpoint's part over the cut cap.
    """
    params.validate()
    seeds = _seeds(params)
    parts, edges, lams = _blocks(params, seeds)
    rng = np.random.default_rng(seeds[params.k])
    n, k = params.n, params.k
    size = n // k
    cap = edge_cut_cap(params)
    load = np.zeros(k, dtype=np.int64)
    present = set(edges)
    cross: list[tuple[int, int]] = []
    wanted = params.cross_edges
    attempts = 0
    while attempts < 50 * n and (wanted is None or len(cross) < wanted):
        open_parts = np.flatnonzero(load < cap)
        if len(open_parts) < 2:
            break
        attempts += 1
        a, b = rng.choice(open_parts, size=2, replace=False)
        u = int(a) * size + int(rng.integers(size))
        v = int(b) * size + int(rng.integers(size))
        key = (u, v) if u < v else (v, u)
        if key in present:
            continue
        present.add(key)
        cross.append(key)
        load[a] += 1
        load[b] += 1
    G = build_graph(n, edges + cross)
    inst = PlantedInstance(
        graph=G, parts=tuple(parts), params=params, mode=EDGE,
        achieved_lambda=tuple(lams), cross_edges=tuple(sorted(cross)),
    )
    return apply_monotone_adversary(inst, params.adversary, seeds[k + 1])


def gen_kpart_vertex(params: PlantedParams) -> PlantedInstance:
    """Sample a k-Part-vertex instance.

    Inter-part edges only join portal vertices; a candidate edge is rejected
    when it would grow some part's symmetric boundary past the cap that keeps
    phi^V(S_t) <= eps*k.
    """
    params.validate()
    seeds = _seeds(params)
    parts, edges, lams = _blocks(params, seeds)
    rng = np.random.default_rng(seeds[params.k])
    n, k = params.n, params.k
    budget = portal_budget(params)
    t_sets = [np.sort(rng.choice(part, size=budget, replace=False)) for part in parts]
    owner = {int(v): t for t, T in enumerate(t_sets) for v in T}

    if params.portal_wiring == "dense":
        candidates = [
            (u, v) for u in sorted(owner) for v in sorted(owner)
            if u < v and owner[u] != owner[v]
        ]
        candidates = [candidates[i] for i in rng.permutation(len(candidates))]
    else:
        order = [int(x) for x in rng.permutation(sorted(owner))]
        candidates = []
        unmatched: list[int] = []
        for u in order:
            partner = next((w for w in unmatched if owner[w] != owner[u]), None)
            if partner is None:
                unmatched.append(u)
            else:
                unmatched.remove(partner)
                candidates.append((min(u, partner), max(u, partner)))

    cap = vertex_boundary_cap(params)
    boundary: list[set[int]] = [set() for _ in range(k)]
    cross: list[tuple[int, int]] = []
    for u, v in candidates:
        a, b = owner[u], owner[v]
        if len(boundary[a] | {u, v}) > cap or len(boundary[b] | {u, v}) > cap:
            continue
        boundary[a] |= {u, v}
        boundary[b] |= {u, v}
        cross.append((u, v))
    G = build_graph(n, edges + cross)
    inst = PlantedInstance(
        graph=G, parts=tuple(parts), params=params, mode=VERTEX,
        achieved_lambda=tuple(lams), t_sets=tuple(t_sets), cross_edges=tuple(sorted(cross)),
    )
    return apply_monotone_adversary(inst, params.adversary, seeds[k + 1])


def generate(params: PlantedParams, mode: str) -> PlantedInstance:
    if mode == EDGE:
        return gen_kpart_edge(params)
    if mode == VERTEX:
        return gen_kpart_vertex(params)
    raise ValueError(f"unknown mode {mode!r}")


def _independent_subset(G: Graph, part: np.ndarray, size: int, rng) -> list[int]:
    chosen: list[int] = []
    for v in rng.permutation(part).tolist():
        if all(w not in chosen for w in G.neighbors(v).tolist()):
            chosen.append(v)
            if len(chosen) == size:
                return chosen
    rest = [v for v in rng.permutation(part).tolist() if v not in chosen]
    return chosen + rest[: size - len(chosen)]


def apply_monotone_adversary(inst: PlantedInstance, policy: AdversaryPolicy, seed=None) -> PlantedInstance:
    """Add intra-part edges per ``policy``; the new edges are logged on the instance."""
    if policy.kind == "none":
        return inst
    rng = np.random.default_rng(seed)
    labels = inst.labels
    present = inst.graph.edge_set()
    added: list[tuple[int, int]] = []

    def add(u: int, v: int) -> None:
        if labels[u] != labels[v]:
            raise AdversaryError(
                f"edge ({u}, {v}) joins parts {labels[u]} and {labels[v]}; "
                "the monotone adversary may only add intra-part edges"
            )
        key = (u, v) if u < v else (v, u)
        if u != v and key not in present:
            present.add(key)
            added.append(key)

    if policy.kind == "explicit":
        for u, v in policy.edges:
            add(int(u), int(v))
    elif policy.kind == "random_intra":
        attempts = 0
        while len(added) < policy.count and attempts < 100 * max(policy.count, 1):
            attempts += 1
            part = inst.parts[int(rng.integers(inst.k))]
            u, v = (int(x) for x in rng.choice(part, size=2, replace=False))
            add(u, v)
    elif policy.kind == "clique_within_part":
        if not 0 <= policy.part < inst.k:
            raise AdversaryError(f"part index {policy.part} out of range [0, {inst.k})")
        members = _independent_subset(inst.graph, inst.parts[policy.part], policy.size, rng)
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                add(members[a], members[b])
    else:
        raise ValueError(f"unknown adversary policy {policy.kind!r}")

    G = inst.graph.with_edges(added)
    return dataclasses.replace(
        inst, graph=G, adversary_edges=tuple(sorted(set(inst.adversary_edges) | set(added)))
    )


def integral_objective(inst: PlantedInstance, mode: str | None = None) -> float:
    """Objective of the planted indicator embedding: cross edges, or 2 x boundary vertices."""
    mode = mode or inst.mode
    labels = inst.labels
    e = inst.graph.edges
    cross = labels[e[:, 0]] != labels[e[:, 1]]
    if mode == EDGE:
        return float(np.count_nonzero(cross))
    boundary = np.zeros(inst.n, dtype=bool)
    boundary[e[cross].ravel()] = True
    return 2.0 * float(np.count_nonzero(boundary))


def premise_ratio(params: PlantedParams, lam: float | None = None) -> float:
    lam = params.lambda_min if lam is None else lam
    return params.eps * params.k * params.r ** 3 / lam


def validate_instance(inst: PlantedInstance) -> dict:
    """Report the model invariants and the theorem premise for ``inst``. Never raises."""
    p = inst.params
    G = inst.graph
    base = inst.base_graph
    per_part = []
    for t, part in enumerate(inst.parts):
        mask = np.zeros(G.n, dtype=bool)
        mask[part] = True
        block_deg = np.asarray(base.induced_subgraph(part).degrees)
        entry = {
            "part": t,
            "size": int(len(part)),
            "lambda": float(inst.achieved_lambda[t]),
            "min_degree": int(block_deg.min()),
            "max_degree": int(block_deg.max()),
            "cut_edges": cut_size(G, mask),
            "boundary_vertices": boundary_size(G, mask),
            "phi": edge_expansion(G, mask),
            "phi_v": vertex_expansion(G, mask),
        }
        per_part.append(entry)
    ratio = premise_ratio(p)
    measured = min(inst.achieved_lambda)
    integral = integral_objective(inst)
    if inst.mode == EDGE:
        bound = p.eps * p.r * p.d * p.n
        model_bound = p.eps * p.r * p.d
        key = "phi"
    else:
        bound = 2 * p.eps * p.n
        model_bound = p.eps * p.k
        key = "phi_v"
    tol = 1e-12
    report = {
        "mode": inst.mode,
        "n": G.n,
        "k": inst.k,
        "m": G.m,
        "cross_edges": len(inst.cross_edges),
        "adversary_edges": len(inst.adversary_edges),
        "parts": per_part,
        "max_expansion": max(e[key] for e in per_part),
        "model_expansion_bound": model_bound,
        "expansion_ok": all(e[key] <= model_bound + tol for e in per_part),
        "lambda_ok": all(lam >= p.lambda_min for lam in inst.achieved_lambda),
        "degree_ok": all(p.d <= e["min_degree"] and e["max_degree"] <= p.r * p.d for e in per_part),
        "premise_ratio": ratio,
        "premise_ratio_measured": premise_ratio(p, measured),
        "premise_holds": Fraction(p.eps) * p.k * Fraction(p.r) ** 3 / Fraction(p.lambda_min) <= PREMISE_BOUND,
        "integral_objective": integral,
        "integral_bound": bound,
        "integral_bound_ok": integral <= bound + tol,
    }
    if inst.mode == VERTEX and inst.t_sets is not None:
        portals = np.zeros(G.n, dtype=bool)
        for T in inst.t_sets:
            portals[np.asarray(T, dtype=np.int64)] = True
        labels = inst.labels
        e = G.edges
        cross = labels[e[:, 0]] != labels[e[:, 1]]
        report["portal_sizes"] = [int(len(T)) for T in inst.t_sets]
        report["portals_confined"] = bool(np.all(portals[e[cross].ravel()]))
    return report
