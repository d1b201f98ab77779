"""Exact OPT by enumeration on tiny graphs, sandwiched between the relaxation and the pipeline."""
from planted_kway.graph import build_graph
from planted_kway.oracle import brute_kway_opt, partition_count, sandwich_check
from planted_kway.pipeline import run_pipeline
from planted_kway.planted import PlantedParams, generate
from planted_kway.sdp import SolverConfig

bridge = build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
cases = [("two triangles + bridge", bridge, 2)]
inst = generate(PlantedParams(n=12, k=3, eps=0.4, lambda_min=0.1, d=3, seed=1), "edge")
cases.append(("three K4 blocks with cross edges", inst.graph, 3))

for name, G, k in cases:
    for mode in ("edge", "vertex"):
        oracle = brute_kway_opt(G, k, mode)
        run = run_pipeline(G, k, mode, SolverConfig(seed=0))
        if run.result.partial:
            # Far from the premise the rounding may stop early; it says why instead of guessing.
            print(f"{name}, {mode}: OPT = {oracle.opt}, rounding partial: {run.result.diagnostic}")
            continue
        final = run.completed or run.result
        rep = sandwich_check(G.n, k, oracle.opt, run.solution.objective, final.max_expansion)
        print(f"{name}, {mode}: {partition_count(G.n, k)} partitions, OPT = {oracle.opt}, "
              f"SDP/n = {rep['sdp_over_n']:.4f}, pipeline = {rep['pipeline_max']:.4f}, "
              f"sandwich holds: {rep['passed']}")
