import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planted_kway.graph import expansion, spectral_gap
from planted_kway.oracle import naive_expansion
from planted_kway.planted import PlantedParams, gen_regular_expander, generate
from planted_kway.rounding import (
    PartitionResult, RoundingError, ball, candidate_radii, centroid_identity_check,
    cluster_diagnostics, complete_partition, largest_ball, poincare_check, round_greedy,
    spread, threshold_cut_l1,
)
from planted_kway.sdp import EmbeddingSolution, SolverConfig, build_relaxation, integral_embedding, solve

from conftest import complete, cycle, disjoint_k4s, random_graph


def _constant_embedding(n, k=2):
    X = np.zeros((n, 3))
    X[:, 0] = 1.0
    return EmbeddingSolution(vectors=X, mode="edge", k=k, objective=0.0, residuals={})


def test_ball_examples(k4s_instance):
    emb = integral_embedding(k4s_instance)
    assert ball(emb, 5, 0.5).tolist() == [4, 5, 6, 7]
    assert 5 in ball(emb, 5, 0.0)
    assert ball(emb, 5, 4.0).tolist() == list(range(12))


def test_candidate_radii_include_left_endpoint():
    row = np.array([0.0, 0.005, 0.012, 0.012, 0.019, 0.02, 0.5])
    assert candidate_radii(row).tolist() == [0.01, 0.012, 0.019]


def test_greedy_integral_k4s(k4s_instance):
    emb = integral_embedding(k4s_instance)
    res = round_greedy(emb, k4s_instance.graph, 3, "edge")
    assert not res.partial
    assert sorted(s.tolist() for s in res.sets) == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11]]
    assert res.expansions == (0.0, 0.0, 0.0)


def test_greedy_all_equal_is_partial():
    res = round_greedy(_constant_embedding(12, 3), disjoint_k4s(), 3, "edge")
    assert res.partial
    assert len(res.sets) == 1
    assert "round 2 of 3" in res.diagnostic


def test_greedy_invariants_on_solver_output():
    inst = generate(PlantedParams(n=60, k=3, eps=0.0, lambda_min=0.3, d=6, seed=3), "edge")
    sol = solve(build_relaxation(inst.graph, 3, "edge"), SolverConfig(seed=3))
    res = round_greedy(sol, inst.graph, 3, "edge")
    assert not res.partial
    seen = np.zeros(60, dtype=int)
    for s, prov in zip(res.sets, res.provenance):
        seen[s] += 1
        assert len(s) >= 10
        # provenance reproduces the set exactly
        assert ball(sol, prov["center"], prov["radius"]).tolist() == s.tolist()
        assert 0.01 <= prov["radius"] < 0.02
    assert seen.max() == 1
    assert sorted(s.tolist() for s in res.sets) == sorted(p.tolist() for p in inst.parts)


def test_threshold_cut_integral(k4s_instance, bridge_instance):
    W, value = threshold_cut_l1(integral_embedding(k4s_instance), k4s_instance.graph, 5, "edge")
    assert W.tolist() == [4, 5, 6, 7] and value == 0.0
    W, value = threshold_cut_l1(integral_embedding(bridge_instance), bridge_instance.graph, 0, "edge")
    assert W.tolist() == [0, 1, 2]
    assert value == pytest.approx(2 / 3)


def test_threshold_cut_constant_embedding():
    with pytest.raises(RoundingError):
        threshold_cut_l1(_constant_embedding(5), complete(5), 0, "edge")


def _threshold_reference(X, G, i0, mode):
    # independent re-implementation with explicit loops and exact arithmetic
    n = len(X)
    d = [float(np.sum((X[i] - X[i0]) ** 2)) for i in range(n)]
    far = [d[i] for i in range(n) if d[i] > 0.02]
    cap = (min(far) - 0.01) if far else None
    y = []
    for i in range(n):
        v = max(0.0, d[i] - 0.01)
        if cap is not None and d[i] > 0.02:
            v = cap
        y.append(v)
    best = None
    for t in sorted(set(y)):
        if t > 0.02:
            continue
        W = [i for i in range(n) if y[i] <= t]
        if 0 < len(W) < n:
            key = (naive_expansion(G, W, mode), len(W))
            if best is None or key < best[0]:
                best = (key, W)
    return best


@settings(max_examples=40, deadline=None)
@given(st.integers(6, 30), st.integers(0, 10_000), st.sampled_from(["edge", "vertex"]))
def test_threshold_cut_matches_reference(n, seed, mode):
    rng = np.random.default_rng(seed)
    G = random_graph(n, 0.3, rng)
    X = rng.normal(size=(n, 4)) * 0.05 + np.eye(4)[rng.integers(2, size=n)]
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    sol = EmbeddingSolution(vectors=X, mode=mode, k=2, objective=0.0, residuals={})
    ref = _threshold_reference(X, G, 0, mode)
    if ref is None:
        with pytest.raises(RoundingError):
            threshold_cut_l1(sol, G, 0, mode)
        return
    W, value = threshold_cut_l1(sol, G, 0, mode)
    assert W.tolist() == ref[1]
    assert value == float(ref[0][0])


def test_complete_k4s(k4s_instance):
    emb = integral_embedding(k4s_instance)
    res = complete_partition(round_greedy(emb, k4s_instance.graph, 3, "edge"), k4s_instance.graph)
    assert res.completed
    assert sorted(s.tolist() for s in res.sets) == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11]]


def test_complete_absorbs_uncovered():
    G = cycle(10)
    partial = PartitionResult(sets=(np.array([0, 1, 2, 3]), np.array([4, 5, 6, 7])), mode="edge",
                              n=10, expansions=(0.0, 0.0), provenance=({}, {}), k=2)
    res = complete_partition(partial, G)
    assert res.sets[1].tolist() == [4, 5, 6, 7, 8, 9]
    assert res.expansions[1] == expansion(G, [4, 5, 6, 7, 8, 9], "edge")
    labels = res.labels()
    assert (labels >= 0).all()


def test_complete_rejects_partial():
    bad = PartitionResult(sets=(np.array([0]),), mode="edge", n=4, expansions=(0.0,),
                          provenance=({},), partial=True, k=2)
    with pytest.raises(RoundingError):
        complete_partition(bad, complete(4))


def test_diagnostics_integral(k4s_instance):
    rep = cluster_diagnostics(integral_embedding(k4s_instance), k4s_instance)
    assert rep.deviations == [0.0, 0.0, 0.0]
    assert rep.centroid_norms == [1.0, 1.0, 1.0]
    off = ~np.eye(3, dtype=bool)
    assert np.all(rep.inner_products[off] == 0.0)
    assert np.all(rep.centroid_distances[off] == 2.0)
    assert rep.passed
    assert rep.flat()["passed"] is True


def test_diagnostics_merged_parts_fail_d(k4s_instance):
    X = integral_embedding(k4s_instance).vectors.copy()
    X[4:8] = X[0]
    sol = EmbeddingSolution(vectors=X, mode="edge", k=3, objective=0.0, residuals={})
    rep = cluster_diagnostics(sol, k4s_instance)
    assert not rep.checks["d_centroid_distance"]
    assert rep.centroid_distances[0, 1] == 0.0


def test_centroid_identity_examples():
    assert centroid_identity_check([[0.0], [2.0]]) == (1.0, 1.0)
    assert centroid_identity_check([[1.0, 2.0]] * 5) == (0.0, 0.0)
    X = np.random.default_rng(0).normal(size=(100, 8))
    lhs, rhs = centroid_identity_check(X)
    loop = sum(float(np.sum((X[i] - X[j]) ** 2)) for i in range(100) for j in range(i + 1, 100)) / 100 ** 2
    assert lhs == pytest.approx(loop, rel=1e-12)
    assert abs(lhs - rhs) <= 1e-9


def test_poincare_k4_tight():
    lhs, ordered, unordered = poincare_check(complete(4), [1, 0, 0, 0], 4 / 3, 3, 1)
    assert lhs == pytest.approx(3.0)
    assert unordered == pytest.approx(3.0)
    assert ordered == pytest.approx(6.0)  # the ordered reading overshoots by a factor 2
    assert poincare_check(complete(4), [2, 2, 2, 2], 4 / 3, 3, 1) == (0.0, 0.0, 0.0)


def test_poincare_random_regular():
    G = gen_regular_expander(100, 12, 0.5, seed=4)
    lam = spectral_gap(G).lambda2
    X = np.random.default_rng(1).normal(size=100)
    lhs, _, unordered = poincare_check(G, X, lam, 12, 1)
    assert lhs >= unordered * (1 - 1e-12)


def test_spread_and_largest_ball(k4s_instance):
    emb = integral_embedding(k4s_instance)
    assert spread(emb) == pytest.approx(2 * 12 ** 2 * (1 - 1 / 3))
    assert largest_ball(emb) == 4
