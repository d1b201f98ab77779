"""SDP relaxations for balanced k-way edge / vertex expansion.

The Gram matrix ``U`` is never formed as a decision variable. Solutions are
unit vectors ``u_i`` (rows of an ``n x p`` array) with ``U = u u^T``, which makes
``U`` positive semidefinite by construction. Constraints are handled with an
augmented Lagrangian (PHR form for the inequalities), the inner problems are
solved by L-BFGS over an unnormalized factor whose rows are projected onto the
sphere, and l2^2 triangle inequalities are separated lazily.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .graph import EDGE, VERTEX, Graph

TRIANGLE_FULL_SCAN_N = 120
AUDIT_FULL_SCAN_N = 400
AUDIT_SAMPLES = 1_000_000
SMALL_N_FULL_RANK = 16


class InfeasibleRelaxationError(ValueError):
    """The relaxation has no feasible point (k > n)."""


@dataclass(frozen=True)
class RelaxationSpec:
    graph: Graph
    k: int
    mode: str
    feasible: bool
    constraints: dict
    objective: str

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def row_target(self) -> float:
        return self.graph.n / self.k


@dataclass(frozen=True)
class SolverConfig:
    rank: int | None = None
    tol_feas: float = 1e-4
    tol_obj: float = 1e-3
    max_outer: int = 60
    max_inner: int = 400
    rho0: float = 10.0
    rho_growth: float = 4.0
    rho_max: float = 1e7
    triangle_budget: int = 2000
    full_scan_max_n: int = TRIANGLE_FULL_SCAN_N
    neighbors: int = 20
    sampled_pairs: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.tol_feas <= 1e-2:
            raise ValueError(f"tol_feas must lie in (0, 1e-2], got {self.tol_feas}")

    def rank_for(self, n: int, k: int) -> int:
        if self.rank is not None:
            p = self.rank
        else:
            # tiny graphs get full rank: low-rank factors stall at spurious stationary points there
            p = max(k + 2, math.ceil(math.sqrt(2 * n)), min(n, SMALL_N_FULL_RANK))
        if p < k:
            raise ValueError(f"rank {p} must be at least k={k}")
        return p


@dataclass(frozen=True, eq=False)
class EmbeddingSolution:
    vectors: np.ndarray
    mode: str
    k: int
    objective: float
    residuals: dict
    eta: np.ndarray | None = None
    trace: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    @property
    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def distances(self) -> np.ndarray:
        """Squared Euclidean distance matrix d(i, j) = |u_i - u_j|^2."""
        return sq_distances(self.vectors)

    @property
    def feasible(self) -> bool:
        return bool(self.trace.get("feasible", False))


def sq_distances(X: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def build_relaxation(G: Graph, k: int, mode: str) -> RelaxationSpec:
    """Describe the relaxation symbolically; triangle inequalities are not materialized."""
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if mode not in (EDGE, VERTEX):
        raise ValueError(f"unknown mode {mode!r}")
    n = G.n
    constraints = {
        "unit_diagonal": n,
        "nonnegativity": n * (n - 1) // 2,
        "row_sum": n,
        "triangle": n * (n - 1) * (n - 2) // 2,
        "psd": 1,
    }
    if mode == EDGE:
        objective = "1/2 sum_{ij in E} (U_ii + U_jj - 2 U_ij)"
    else:
        constraints["eta"] = 2 * G.m
        constraints["eta_variables"] = n
        objective = "sum_i eta_i, eta_i >= U_ii + U_jj - 2 U_ij for j in N(i)"
    return RelaxationSpec(graph=G, k=k, mode=mode, feasible=k <= n,
                          constraints=constraints, objective=objective)


def objective_value(G: Graph, vectors: np.ndarray, mode: str, eta: np.ndarray | None = None) -> float:
    e = G.edges
    diff = vectors[e[:, 0]] - vectors[e[:, 1]]
    dist = np.einsum("ij,ij->i", diff, diff)
    if mode == EDGE:
        return 0.5 * float(dist.sum())
    if eta is None:
        eta = eta_from_vectors(G, vectors)
    return float(np.sum(eta))


def eta_from_vectors(G: Graph, vectors: np.ndarray) -> np.ndarray:
    """eta_i = max over neighbours j of |u_i - u_j|^2 (0 for isolated vertices)."""
    e = G.edges
    diff = vectors[e[:, 0]] - vectors[e[:, 1]]
    dist = np.einsum("ij,ij->i", diff, diff)
    eta = np.zeros(G.n)
    np.maximum.at(eta, e[:, 0], dist)
    np.maximum.at(eta, e[:, 1], dist)
    return eta


def make_solution(spec: RelaxationSpec, vectors: np.ndarray, eta: np.ndarray | None = None,
                  trace: dict | None = None, audit_seed: int = 0) -> EmbeddingSolution:
    vectors = np.asarray(vectors, dtype=np.float64)
    if spec.mode == VERTEX and eta is None:
        eta = eta_from_vectors(spec.graph, vectors)
    obj = objective_value(spec.graph, vectors, spec.mode, eta)
    sol = EmbeddingSolution(vectors=vectors, mode=spec.mode, k=spec.k, objective=obj,
                            residuals={}, eta=eta, trace=dict(trace or {}))
    residuals = check_feasibility(sol, spec, seed=audit_seed)
    return replace(sol, residuals=residuals)


def integral_embedding(inst, mode: str | None = None) -> EmbeddingSolution:
    """u_i = e_t for i in S_t; exactly feasible for both relaxations."""
    mode = mode or inst.mode
    X = np.zeros((inst.n, inst.k))
    X[np.arange(inst.n), inst.labels] = 1.0
    spec = build_relaxation(inst.graph, inst.k, mode)
    return make_solution(spec, X, trace={"source": "integral", "feasible": True})


# -- feasibility audit -----------------------------------------------------

def _triangle_scan(D: np.ndarray, budget: int, tol: float) -> tuple[list[tuple[int, int, int]], float]:
    """Exact scan over all (i, j, k); returns the top ``budget`` violated triples and the max violation.

    Violation of (i, j, k) is d(i,k) - d(i,j) - d(j,k); triples are reported with i < k.
    """
    n = D.shape[0]
    worst = 0.0
    best_v = np.empty(0)
    best_t = np.empty((0, 3), dtype=np.int64)
    iu = np.triu_indices(n, 1)
    for j in range(n):
        viol = D[iu] - D[iu[0], j] - D[j, iu[1]]
        worst = max(worst, float(viol.max()) if viol.size else 0.0)
        hit = np.flatnonzero(viol > tol)
        if not hit.size:
            continue
        hit = hit[(iu[0][hit] != j) & (iu[1][hit] != j)]
        if not hit.size:
            continue
        if hit.size > budget:
            hit = hit[np.argpartition(-viol[hit], budget - 1)[:budget]]
        trip = np.column_stack([iu[0][hit], np.full(hit.size, j), iu[1][hit]])
        best_v = np.concatenate([best_v, viol[hit]])
        best_t = np.vstack([best_t, trip])
        if best_v.size > budget:
            keep = np.argpartition(-best_v, budget - 1)[:budget]
            best_v, best_t = best_v[keep], best_t[keep]
    order = np.lexsort((best_t[:, 2], best_t[:, 1], best_t[:, 0], -best_v))
    return [tuple(int(x) for x in t) for t in best_t[order]], worst


def _triangle_sampled(D: np.ndarray, samples: int, rng: np.random.Generator) -> float:
    n = D.shape[0]
    worst = 0.0
    chunk = 100_000
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        i, j, k = (rng.integers(n, size=m) for _ in range(3))
        worst = max(worst, float(np.max(D[i, k] - D[i, j] - D[j, k])))
        done += m
    return worst


def check_feasibility(sol: EmbeddingSolution, spec: RelaxationSpec, seed: int = 0) -> dict:
    """Max residual per constraint family (0 means satisfied).

    Row-sum residuals are reported relative to n. Triangle inequalities are
    scanned exhaustively for n <= 400 and by 10^6 random triples above.
    """
    X = sol.vectors
    n = X.shape[0]
    U = X @ X.T
    diag = np.diag(U)
    off = U.copy()
    np.fill_diagonal(off, np.inf)
    D = np.maximum(diag[:, None] + diag[None, :] - 2.0 * U, 0.0)
    np.fill_diagonal(D, 0.0)
    out = {
        "diagonal": float(np.max(np.abs(diag - 1.0))) if n else 0.0,
        "nonnegativity": float(max(0.0, -np.min(off))) if n > 1 else 0.0,
        "row_sum": float(np.max(np.abs(U.sum(axis=1) - spec.row_target)) / n) if n else 0.0,
    }
    if n <= AUDIT_FULL_SCAN_N:
        _, worst = _triangle_scan(D, budget=1, tol=np.inf)
        out["triangle_method"] = "exact"
    else:
        worst = _triangle_sampled(D, AUDIT_SAMPLES, np.random.default_rng(seed))
        out["triangle_method"] = "sampled"
    out["triangle"] = max(0.0, worst)
    if spec.mode == VERTEX:
        eta = sol.eta if sol.eta is not None else np.zeros(n)
        e = spec.graph.edges
        dist = D[e[:, 0], e[:, 1]]
        gap = np.concatenate([dist - eta[e[:, 0]], dist - eta[e[:, 1]]])
        out["eta"] = float(max(0.0, gap.max())) if gap.size else 0.0
    return out


def max_residual(residuals: dict) -> float:
    return max(v for k, v in residuals.items() if isinstance(v, float))


def separate_triangles(sol: EmbeddingSolution, budget: int, tol: float = 1e-4,
                       full_scan_max_n: int = TRIANGLE_FULL_SCAN_N, neighbors: int = 20,
                       sampled_pairs: int | None = None, seed: int = 0) -> list[tuple[int, int, int]]:
    """Up to ``budget`` triples (i, j, k) whose violation d(i,k) - d(i,j) - d(j,k) exceeds ``tol``.

    Exhaustive for n <= ``full_scan_max_n``; otherwise sampled (i, k) pairs are
    tested against the ``neighbors`` nearest points of i and of k.
    """
    return _separate(sol.distances(), budget, tol, full_scan_max_n, neighbors, sampled_pairs,
                     np.random.default_rng(seed))


def _separate(D, budget, tol, full_scan_max_n, neighbors, sampled_pairs, rng):
    n = D.shape[0]
    if n < 3 or budget <= 0:
        return []
    if n <= full_scan_max_n:
        return _triangle_scan(D, budget, tol)[0]
    nn = min(neighbors, n - 1)
    order = np.argsort(D, axis=1, kind="stable")
    near = order[:, 1:nn + 1]
    far = order[:, -1:]
    pairs = sampled_pairs if sampled_pairs is not None else 30 * n
    i = rng.integers(n, size=pairs)
    k = rng.integers(n, size=pairs)
    # every point is also paired with its farthest point
    i = np.concatenate([i, np.arange(n)])
    k = np.concatenate([k, far[:, 0]])
    keep = i != k
    i, k = i[keep], k[keep]
    cand = np.concatenate([near[i], near[k]], axis=1)
    viol = D[i, k][:, None] - D[i[:, None], cand] - D[cand, k[:, None]]
    ok = (cand != i[:, None]) & (cand != k[:, None]) & (viol > tol)
    rows, cols = np.nonzero(ok)
    if not rows.size:
        return []
    a, b, c = i[rows], cand[rows, cols], k[rows]
    lo, hi = np.minimum(a, c), np.maximum(a, c)
    trip = np.column_stack([lo, b, hi])
    v = viol[rows, cols]
    trip, idx = np.unique(trip, axis=0, return_index=True)
    v = v[idx]
    order = np.lexsort((trip[:, 2], trip[:, 1], trip[:, 0], -v))[:budget]
    return [tuple(int(x) for x in t) for t in trip[order]]


# -- augmented Lagrangian --------------------------------------------------

class AugmentedLagrangian:
    """PHR augmented Lagrangian of the relaxation in the factor ``Y`` (and eta).

    ``x`` packs ``Y.ravel()`` followed by eta in vertex mode. Vectors are
    ``u_i = y_i / |y_i|``, so the unit diagonal holds identically.
    """

    def __init__(self, spec: RelaxationSpec, p: int, rho: float):
        self.spec = spec
        self.p = p
        self.rho = rho
        n = spec.n
        self.row_mult = np.zeros(n)
        self.nonneg_mult = np.zeros((n, n))
        self.triangles = np.empty((0, 3), dtype=np.int64)
        self.tri_mult = np.empty(0)
        e = spec.graph.edges
        # directed edge list (i, j): eta_i >= d(i, j)
        self.arcs = np.vstack([e, e[:, ::-1]]) if len(e) else np.empty((0, 2), dtype=np.int64)
        self.arc_mult = np.zeros(len(self.arcs))
        self._offdiag = ~np.eye(n, dtype=bool)

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        n, p = self.spec.n, self.p
        Y = x[: n * p].reshape(n, p)
        eta = x[n * p:] if self.spec.mode == VERTEX else None
        return Y, eta

    def pack(self, Y: np.ndarray, eta: np.ndarray | None) -> np.ndarray:
        parts = [Y.ravel()]
        if self.spec.mode == VERTEX:
            parts.append(eta)
        return np.concatenate(parts)

    def constraint_values(self, u: np.ndarray, eta: np.ndarray | None):
        n = self.spec.n
        U = u @ u.T
        row = (U.sum(axis=1) - self.spec.row_target) / n
        t = self.triangles
        tri = 2.0 - 2.0 * U[t[:, 0], t[:, 1]] - 2.0 * U[t[:, 1], t[:, 2]] + 2.0 * U[t[:, 0], t[:, 2]]
        arc = None
        if eta is not None:
            a = self.arcs
            arc = eta[a[:, 0]] - 2.0 + 2.0 * U[a[:, 0], a[:, 1]]
        return U, row, tri, arc

    def value_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        spec, rho = self.spec, self.rho
        n = spec.n
        Y, eta = self.unpack(x)
        norms = np.linalg.norm(Y, axis=1)
        u = Y / norms[:, None]
        U, row, tri, arc = self.constraint_values(u, eta)
        G = np.zeros((n, n))  # dF/dU_ij, assembled unsymmetrized
        e = spec.graph.edges

        if spec.mode == EDGE:
            value = float(np.sum(1.0 - U[e[:, 0], e[:, 1]]))
            np.add.at(G, (e[:, 0], e[:, 1]), -1.0)
        else:
            value = float(np.sum(eta))

        value += float(self.row_mult @ row + 0.5 * rho * row @ row)
        G += ((self.row_mult + rho * row) / n)[:, None]

        shifted = np.maximum(0.0, self.nonneg_mult - rho * U)
        shifted[~self._offdiag] = 0.0
        value += float(np.sum(shifted ** 2 - self.nonneg_mult ** 2)) / (2.0 * rho)
        G -= shifted

        if len(self.triangles):
            t = self.triangles
            s = np.maximum(0.0, self.tri_mult - rho * tri)
            value += float(np.sum(s ** 2 - self.tri_mult ** 2)) / (2.0 * rho)
            np.add.at(G, (t[:, 0], t[:, 1]), 2.0 * s)
            np.add.at(G, (t[:, 1], t[:, 2]), 2.0 * s)
            np.add.at(G, (t[:, 0], t[:, 2]), -2.0 * s)

        grad_eta = None
        if eta is not None:
            a = self.arcs
            s = np.maximum(0.0, self.arc_mult - rho * arc)
            value += float(np.sum(s ** 2 - self.arc_mult ** 2)) / (2.0 * rho)
            grad_eta = np.ones(n)
            np.add.at(grad_eta, a[:, 0], -s)
            np.add.at(G, (a[:, 0], a[:, 1]), -2.0 * s)

        grad_u = (G + G.T) @ u
        radial = np.einsum("ij,ij->i", grad_u, u)
        grad_Y = (grad_u - radial[:, None] * u) / norms[:, None]
        return value, self.pack(grad_Y, grad_eta)

    def update_multipliers(self, u: np.ndarray, eta: np.ndarray | None) -> None:
        rho = self.rho
        U, row, tri, arc = self.constraint_values(u, eta)
        self.row_mult = self.row_mult + rho * row
        nm = np.maximum(0.0, self.nonneg_mult - rho * U)
        nm[~self._offdiag] = 0.0
        self.nonneg_mult = nm
        if len(self.triangles):
            self.tri_mult = np.maximum(0.0, self.tri_mult - rho * tri)
        if arc is not None:
            self.arc_mult = np.maximum(0.0, self.arc_mult - rho * arc)

    def add_triangles(self, triples) -> int:
        if not triples:
            return 0
        have = {tuple(t) for t in self.triangles.tolist()}
        new = [t for t in triples if tuple(t) not in have]
        if new:
            self.triangles = np.vstack([self.triangles, np.array(new, dtype=np.int64)])
            self.tri_mult = np.concatenate([self.tri_mult, np.zeros(len(new))])
        return len(new)


def _feasibility_from_al(al: AugmentedLagrangian, u, eta) -> float:
    U, row, tri, arc = al.constraint_values(u, eta)
    off = U[al._offdiag]
    vals = [np.max(np.abs(row)), max(0.0, -off.min()) if off.size else 0.0]
    if tri.size:
        vals.append(max(0.0, -tri.min()))
    if arc is not None and arc.size:
        vals.append(max(0.0, -arc.min()))
    return float(max(vals))


def initial_factor(n: int, p: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    Y = np.abs(rng.standard_normal((n, p)))
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def solve(spec: RelaxationSpec, cfg: SolverConfig = SolverConfig(),
          init: np.ndarray | None = None, reference: EmbeddingSolution | None = None) -> EmbeddingSolution:
    """Approximately minimize the relaxation.

    ``init`` optionally warm-starts the factor (rows are normalized; columns
    are zero-padded up to the configured rank). ``reference`` (for example the
    planted integral embedding) is only used to record the objective gap in
    the trace. The returned solution carries ``trace['feasible']``; when the
    iteration budget runs out the last iterate is returned flagged infeasible.
    """
    if not spec.feasible:
        raise InfeasibleRelaxationError(
            f"k={spec.k} > n={spec.n}: unit diagonal forces row sums >= 1 > n/k"
        )
    n, k = spec.n, spec.k
    p = cfg.rank_for(n, k)
    rng = np.random.default_rng(cfg.seed)
    if init is None:
        Y = initial_factor(n, p, rng)
    else:
        init = np.asarray(init, dtype=np.float64)
        Y = np.zeros((n, max(p, init.shape[1])))
        Y[:, : init.shape[1]] = init
        Y /= np.linalg.norm(Y, axis=1, keepdims=True)
        p = Y.shape[1]
    eta = None
    al = AugmentedLagrangian(spec, p, cfg.rho0)
    if spec.mode == VERTEX:
        eta = eta_from_vectors(spec.graph, Y)

    # eta lives in [0, 4] like the squared distances it bounds; isolated vertices would otherwise drift to -inf
    bounds = None
    if spec.mode == VERTEX:
        bounds = [(None, None)] * (n * p) + [(0.0, 4.0)] * n
    sep_rng = np.random.default_rng(rng.integers(2**63))
    history = []
    inner_total = 0
    prev_feas = math.inf
    prev_obj = math.inf
    converged = False
    for outer in range(cfg.max_outer):
        res = minimize(al.value_and_grad, al.pack(Y, eta), jac=True, method="L-BFGS-B",
                       bounds=bounds,
                       options={"maxiter": cfg.max_inner, "gtol": 1e-9, "ftol": 1e-15, "maxcor": 20})
        inner_total += int(res.nit)
        Y, eta = al.unpack(res.x)
        Y = Y / np.linalg.norm(Y, axis=1, keepdims=True)
        eta = None if eta is None else eta.copy()
        feas = _feasibility_from_al(al, Y, eta)
        D = sq_distances(Y)
        triples = _separate(D, cfg.triangle_budget, cfg.tol_feas / 2, cfg.full_scan_max_n,
                            cfg.neighbors, cfg.sampled_pairs, sep_rng)
        added = al.add_triangles(triples)
        obj = objective_value(spec.graph, Y, spec.mode, eta)
        history.append({"outer": outer, "inner": int(res.nit), "objective": obj,
                        "feasibility": feas, "rho": al.rho, "new_triangles": added})
        stalled = abs(prev_obj - obj) <= cfg.tol_obj * max(1.0, abs(obj)) * 0.1
        if feas <= cfg.tol_feas / 2 and added == 0 and (stalled or outer == cfg.max_outer - 1):
            if n > cfg.full_scan_max_n and n <= AUDIT_FULL_SCAN_N:
                # sampled separation may miss violations the final audit would catch
                exact, worst = _triangle_scan(D, cfg.triangle_budget, cfg.tol_feas / 2)
                if exact and al.add_triangles(exact):
                    history[-1]["new_triangles"] += len(exact)
                    al.update_multipliers(Y, eta)
                    prev_obj, prev_feas = obj, feas
                    continue
            converged = True
            break
        al.update_multipliers(Y, eta)
        if feas > 0.25 * prev_feas and al.rho < cfg.rho_max:
            al.rho = min(cfg.rho_max, al.rho * cfg.rho_growth)
        prev_feas = feas
        prev_obj = obj

    eta_out = eta_from_vectors(spec.graph, Y) if spec.mode == VERTEX else None
    trace = {
        "outer_iterations": len(history),
        "inner_iterations": inner_total,
        "active_triangles": int(len(al.triangles)),
        "rank": p,
        "final_rho": al.rho,
        "converged": converged,
        "history": history,
    }
    sol = make_solution(spec, Y, eta_out, trace, audit_seed=cfg.seed)
    feasible = converged and max_residual(sol.residuals) <= cfg.tol_feas
    sol.trace["feasible"] = bool(feasible)
    if reference is not None:
        sol.trace["reference_objective"] = reference.objective
        sol.trace["objective_gap"] = sol.objective - reference.objective
        sol.trace["within_objective_tolerance"] = bool(
            sol.objective <= reference.objective + cfg.tol_obj * n
        )
    return sol
