"""Greedy ball rounding, partition completion and the centroid diagnostics on a premise instance."""
from planted_kway.pipeline import match_planted, run_pipeline
from planted_kway.planted import PlantedParams, generate
from planted_kway.rounding import cluster_diagnostics, threshold_cut_l1
from planted_kway.sdp import SolverConfig

# eps = 2e-4 keeps eps*k/lambda under 1/800 for these 16-regular blocks.
inst = generate(PlantedParams(n=300, k=3, eps=2e-4, lambda_min=0.5, d=16, seed=0), "edge")
run = run_pipeline(inst.graph, inst.k, "edge", SolverConfig(seed=0))

for W, phi, prov in zip(run.result.sets, run.result.expansions, run.result.provenance):
    print(f"ball at {prov['center']:3d}, radius {prov['radius']:.4f}: |W| = {len(W)}, phi = {phi}")
print("match against planted parts:", match_planted(run.result, inst))
print("completed partition sizes:", run.completed.sizes)

diag = cluster_diagnostics(run.solution, inst)
print("bound k*eps*r^3/lambda =", round(diag.bound, 5))
print("max deviation", max(diag.deviations), "| min centroid norm", min(diag.centroid_norms))
for name, ok in diag.checks.items():
    print(f"  check {name}: {'pass' if ok else 'FAIL'}")

W, value = threshold_cut_l1(run.solution, inst.graph, 0, "edge")
print("threshold cut around vertex 0:", len(W), "vertices, expansion", value)
