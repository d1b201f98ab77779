"""Balanced k-way edge/vertex expansion on planted instances: generation, SDP, rounding, oracles."""
from .graph import (EDGE, VERTEX, Graph, GraphError, build_graph, edge_expansion, expansion,
                    kway_expansion, spectral_gap, vertex_expansion)
from .oracle import OracleBudgetError, brute_kway_opt, naive_expansion, sandwich_check
from .pipeline import PipelineRun, match_planted, run_pipeline
from .planted import (AdversaryPolicy, PlantedInstance, PlantedParams, apply_monotone_adversary,
                      gen_kpart_edge, gen_kpart_vertex, gen_regular_expander, generate,
                      validate_instance)
from .rounding import (PartitionResult, cluster_diagnostics, complete_partition, round_greedy,
                       threshold_cut_l1)
from .sdp import EmbeddingSolution, SolverConfig, build_relaxation, check_feasibility, solve

__version__ = "0.1.0"

__all__ = [
    "EDGE", "VERTEX", "Graph", "GraphError", "build_graph", "edge_expansion", "expansion",
    "kway_expansion", "spectral_gap", "vertex_expansion", "OracleBudgetError", "brute_kway_opt",
    "naive_expansion", "sandwich_check", "PipelineRun", "match_planted", "run_pipeline",
    "AdversaryPolicy", "PlantedInstance", "PlantedParams", "apply_monotone_adversary",
    "gen_kpart_edge", "gen_kpart_vertex", "gen_regular_expander", "generate", "validate_instance",
    "PartitionResult", "cluster_diagnostics", "complete_partition", "round_greedy",
    "threshold_cut_l1", "EmbeddingSolution", "SolverConfig", "build_relaxation",
    "check_feasibility", "solve",
]
