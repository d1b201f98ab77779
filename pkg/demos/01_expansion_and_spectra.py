"""Edge and vertex expansion, k-way expansion and the normalized-Laplacian gap on small graphs."""
from planted_kway.graph import (build_graph, edge_boundary, edge_expansion, kway_expansion,
                                spectral_gap, vertex_boundary, vertex_expansion)

# Two triangles joined by a single bridge edge (2, 3).
G = build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
S = [0, 1, 2]

print("edges leaving S:", sorted(edge_boundary(G, S)))
print("boundary vertices on both sides:", vertex_boundary(G, S).tolist())

# Exact rationals are available for comparisons; floats are the default.
print("phi(S)   =", edge_expansion(G, S, exact=True), "=", edge_expansion(G, S))
print("phi^V(S) =", vertex_expansion(G, S, exact=True))

worst, per_part = kway_expansion(G, [[0, 1, 2], [3, 4, 5]], "vertex", exact=True)
print("2-way vertex expansion of the triangle split:", worst, per_part)

# The bridge makes the graph a poor expander; a complete graph is the best possible.
K6 = build_graph(6, [(i, j) for i in range(6) for j in range(i + 1, 6)])
for name, H in (("two triangles", G), ("K6", K6)):
    rep = spectral_gap(H)
    print(f"{name:14s} lambda2 = {rep.lambda2:.6f}  ({rep.method}, residual {rep.residual:.1e})")
