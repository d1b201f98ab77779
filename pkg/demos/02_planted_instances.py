"""Sampling planted k-way instances in both models, then letting the monotone adversary add edges."""
from planted_kway.planted import (AdversaryPolicy, PlantedParams, apply_monotone_adversary,
                                  generate, validate_instance)

params = PlantedParams(n=90, k=3, eps=0.02, lambda_min=0.4, d=8, seed=7)

edge_inst = generate(params, "edge")
rep = validate_instance(edge_inst)
print("edge model: cross edges", rep["cross_edges"], "| max phi", round(rep["max_expansion"], 4),
      "<= eps*r*d =", rep["model_expansion_bound"])
print("  block gaps:", [round(p["lambda"], 3) for p in rep["parts"]])
print("  premise eps*k*r^3/lambda =", round(rep["premise_ratio"], 4), "holds:", rep["premise_holds"])

vertex_inst = generate(params, "vertex")
rep = validate_instance(vertex_inst)
print("vertex model: portals per part", rep["portal_sizes"], "| confined:", rep["portals_confined"],
      "| max phi^V", round(rep["max_expansion"], 4))

# The adversary may only add edges inside a part; it cannot change any cut.
policy = AdversaryPolicy("clique_within_part", part=1, size=5)
hard = apply_monotone_adversary(edge_inst, policy, seed=0)
print("adversary added", len(hard.adversary_edges), "edges; cut sizes before/after:",
      [p["cut_edges"] for p in validate_instance(edge_inst)["parts"]],
      [p["cut_edges"] for p in validate_instance(hard)["parts"]])
