"""Brute-force ground truth for tiny graphs."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction

from .graph import EDGE, VERTEX, Graph, GraphError

# largest n enumerated per k; k >= 4 shares the k = 3 limit
ORACLE_MAX_N = {2: 16, 3: 12}


class OracleBudgetError(ValueError):
    """The instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class OracleResult:
    opt: Fraction
    partition: tuple[tuple[int, ...], ...]
    candidates: int
    seconds: float


def naive_expansion(G: Graph, S, mode: str) -> Fraction:
    """Expansion of S by a double loop over vertex pairs, independent of the vectorized path."""
    members = set(int(s) for s in S)
    n = G.n
    if not members or len(members) == n:
        raise GraphError("vertex set must be a nonempty proper subset")
    if any(not 0 <= s < n for s in members):
        raise GraphError(f"vertex ids must lie in [0, {n})")
    adjacent = G.edge_set()
    crossing = 0
    touched = set()
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) in adjacent and ((u in members) != (v in members)):
                crossing += 1
                touched.add(u)
                touched.add(v)
    if mode == EDGE:
        count = crossing
    elif mode == VERTEX:
        count = len(touched)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    size = len(members)
    return Fraction(count * n, size * (n - size))


def balanced_partitions(n: int, k: int):
    """Yield each balanced k-partition of range(n) once (the part holding the lowest free vertex comes first)."""
    size = n // k

    def rec(remaining: tuple[int, ...]):
        if not remaining:
            yield ()
            return
        head, rest = remaining[0], remaining[1:]
        for others in itertools.combinations(rest, size - 1):
            part = (head,) + others
            chosen = set(others)
            left = tuple(v for v in rest if v not in chosen)
            for tail in rec(left):
                yield (part,) + tail

    yield from rec(tuple(range(n)))


def partition_count(n: int, k: int) -> int:
    size = n // k
    return math.factorial(n) // (math.factorial(size) ** k * math.factorial(k))


def brute_kway_opt(G: Graph, k: int, mode: str) -> OracleResult:
    """Exact min over balanced k-partitions of the max per-part expansion."""
    n = G.n
    if k < 2 or n % k:
        raise ValueError(f"need k >= 2 dividing n, got n={n}, k={k}")
    limit = ORACLE_MAX_N.get(k, ORACLE_MAX_N[3])
    if n > limit:
        raise OracleBudgetError(f"n={n} exceeds the enumeration budget n <= {limit} for k={k}")
    start = time.perf_counter()
    best = None
    count = 0
    for parts in balanced_partitions(n, k):
        count += 1
        value = max(naive_expansion(G, p, mode) for p in parts)
        if best is None or value < best[0]:
            best = (value, parts)
    return OracleResult(opt=best[0], partition=best[1], candidates=count,
                        seconds=time.perf_counter() - start)


def sandwich_check(n: int, k: int, opt: Fraction, sdp_objective: float, pipeline_max: float,
                   tol_obj: float = 1e-3) -> dict:
    """Check SDP/n <= OPT + tol and pipeline >= OPT; report pipeline/(k*OPT) when OPT > 0.

    When OPT = 0 the pipeline must reach 0 exactly and the ratio is ``None``.
    """
    opt_f = float(opt)
    sdp_ok = sdp_objective / n <= opt_f + tol_obj
    if opt == 0:
        pipeline_ok = pipeline_max == 0
        ratio = None
    else:
        pipeline_ok = pipeline_max >= opt_f - 1e-12
        ratio = pipeline_max / (k * opt_f)
    return {
        "opt": opt_f,
        "opt_exact": f"{opt.numerator}/{opt.denominator}",
        "sdp_over_n": sdp_objective / n,
        "sdp_ok": bool(sdp_ok),
        "pipeline_max": pipeline_max,
        "pipeline_ok": bool(pipeline_ok),
        "ratio": ratio,
        "passed": bool(sdp_ok and pipeline_ok),
    }
