"""Solve -> round -> complete, glued together for a single instance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .rounding import PartitionResult, RoundingError, complete_partition, round_greedy
from .sdp import EmbeddingSolution, SolverConfig, build_relaxation, solve


@dataclass
class PipelineRun:
    solution: EmbeddingSolution
    result: PartitionResult
    completed: PartitionResult | None


def run_pipeline(G: Graph, k: int, mode: str, cfg: SolverConfig = SolverConfig(),
                 size_floor=None, reference: EmbeddingSolution | None = None) -> PipelineRun:
    sol = solve(build_relaxation(G, k, mode), cfg, reference=reference)
    result = round_greedy(sol, G, k, mode, size_floor=size_floor)
    completed = None
    if not result.partial:
        try:
            completed = complete_partition(result, G, mode)
        except RoundingError:
            completed = None
    return PipelineRun(solution=sol, result=result, completed=completed)


def match_planted(result: PartitionResult, inst) -> dict:
    """Match each output set to the planted part it overlaps most.

    ``overlap_fractions`` are |W_t ∩ S_match| / |S_match|; ``majority`` asks
    every set to have more than half its members in its matched part.
    """
    labels = inst.labels
    matches, fractions, majority, exact = [], [], [], []
    for s in result.sets:
        counts = np.bincount(labels[s], minlength=inst.k)
        t = int(np.argmax(counts))
        matches.append(t)
        fractions.append(float(counts[t]) / len(inst.parts[t]))
        majority.append(bool(2 * counts[t] > len(s)))
        exact.append(bool(len(s) == len(inst.parts[t]) and counts[t] == len(s)))
    return {
        "matches": matches,
        "overlap_fractions": fractions,
        "distinct": len(set(matches)) == len(matches),
        "majority": all(majority),
        "exact": all(exact) and len(result.sets) == inst.k,
    }
