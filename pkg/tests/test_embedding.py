import random

import pytest
from hypothesis import given, settings, strategies as st

from copytree_embed.embedding import (
    DEMAND_ROBUST,
    FRT_SUPPORT,
    MERGED_PARTIAL,
    build_construction1,
    build_construction2,
    build_demand_robust,
    demand_robust_k,
    forward_map_tuple,
    partial_tree_from,
    verify_embedding,
)
from copytree_embed.decomposition import padded_family
from copytree_embed.generators import random_connected_graph
from copytree_embed.graph import GraphError, WeightedGraph, is_well_separated, shortest_path_metric


def test_two_vertex_construction1(two_vertex):
    e = build_construction1(two_vertex, 0, 0.25)
    assert e.construction == MERGED_PARTIAL
    assert e.chi <= 45
    assert e.meta["alpha"] == 1 / 16
    assert e.phi[0] == (e.tree.root,)
    # one partial tree with a single edge of weight 16
    assert e.tree.n == 2
    assert e.tree.weight[1] == 16.0
    assert e.forward({0}) == {1}
    assert e.backward({1}) == {0}
    assert verify_embedding(e, trials=20).ok


def test_partial_tree_weight_two_vertex(two_vertex):
    m = shortest_path_metric(two_vertex)
    fam = padded_family(m, 0.25, 1 / 16)
    p = partial_tree_from(m, fam.decompositions[0], 0, 1 / 16)
    assert p.tree.edge_weight(p.tree.edges) == 16.0
    assert p.gamma == 16.0


def test_single_vertex_graph():
    g = WeightedGraph(1, (), 0)
    e = build_construction1(g, 0)
    assert e.tree.n == 1
    assert e.forward(set()) == frozenset()


def test_root_required():
    g = WeightedGraph(2, ((0, 1, 1.0),), None)
    with pytest.raises(GraphError):
        build_construction1(g)


def test_construction2_support(path3):
    e = build_construction2(path3, 0, k=6, seed=3)
    assert e.construction == FRT_SUPPORT
    assert e.chi == 6
    rep = verify_embedding(e, trials=30, seed=1)
    assert rep.ok, rep.problems
    # every constituent is a full tree: distances dominate the metric
    m = shortest_path_metric(path3)
    for part in e.constituents:
        t = part.tree
        for a in range(t.n):
            for b in range(t.n):
                assert t.distance(a, b) >= m.d[t.label[a], t.label[b]] - 1e-9


def test_construction2_seeded(path3):
    a = build_construction2(path3, 0, k=5, seed=7).to_json()
    b = build_construction2(path3, 0, k=5, seed=7).to_json()
    assert a == b


def test_demand_robust_tuple(path3):
    e = build_demand_robust(path3, 0, m=2, seed=0)
    assert e.construction == DEMAND_ROBUST
    assert e.chi == demand_robust_k(3, 2)
    X0, X1, X2 = forward_map_tuple(e, [{0}, {1}, set()])
    # X'_0 carries every constituent's projection of X0
    assert all(p <= X0 for p in e.projections({0}))
    assert X2 == frozenset()
    lab = e.tree.component_labels(X0 | X1)
    assert any(lab[x] == lab[e.tree.root] for x in e.phi[2])
    with pytest.raises(ValueError):
        forward_map_tuple(e, [{0}])


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 9), st.integers(0, 10**6))
def test_construction1_properties(n, seed):
    g = random_connected_graph(random.Random(seed), n)
    e = build_construction1(g, 0, 0.25)
    assert is_well_separated(e.tree)
    rep = verify_embedding(e, trials=25, seed=seed)
    assert rep.ok, rep.problems
    assert rep.root_copies_property and rep.forward_monotone
    assert rep.alpha_fwd <= e.alpha_nominal + 1e-9


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_construction1_is_deterministic(n, seed):
    g = random_connected_graph(random.Random(seed), n)
    assert build_construction1(g, 0).to_json() == build_construction1(g, 0).to_json()


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 9), st.integers(0, 10**6))
def test_partial_trees_dominate(n, seed):
    g = random_connected_graph(random.Random(seed), n)
    e = build_construction1(g, 0)
    m = e.metric
    for part in e.constituents:
        t = part.tree
        assert is_well_separated(t)
        for a in range(t.n):
            for b in range(a + 1, t.n):
                d = m.d[t.label[a], t.label[b]]
                assert d <= t.distance(a, b) + 1e-9
                assert t.distance(a, b) <= 64 / e.meta["alpha"] * d + 1e-9


def _merged_from_draws(g, alpha, draws, seed):
    """Merge partial trees from random cutting draws that pad the root."""
    from copytree_embed.decomposition import CuttingDraw, decomposition_from
    from copytree_embed.embedding import CopyTreeEmbedding, _merge

    m = shortest_path_metric(g)
    rng = random.Random(seed)
    parts, seen = [], set()
    while len(parts) < draws:
        pi = list(range(g.n))
        rng.shuffle(pi)
        hd = decomposition_from(m, CuttingDraw(tuple(pi), rng.uniform(0.5, 0.999)))
        try:
            part = partial_tree_from(m, hd, 0, alpha)
        except Exception:
            continue
        if part.signature() not in seen:
            seen.add(part.signature())
            parts.append(part)
    tree, phi, prov, maps = _merge(parts, 0, g.n)
    return CopyTreeEmbedding(g, m, 0, tree, phi, MERGED_PARTIAL, prov, tuple(parts), maps, None, {})


@settings(max_examples=15, deadline=None)
@given(st.integers(4, 10), st.integers(0, 10**6))
def test_merging_distinct_partial_trees(n, seed):
    g = random_connected_graph(random.Random(seed), n)
    e = _merged_from_draws(g, 1 / 64, 4, seed)
    shared = all(
        set(e.provenance[x] for x in e.phi[u]) & set(e.provenance[x] for x in e.phi[v])
        for u in range(1, n) for v in range(u + 1, n)
    )
    if not all(e.phi):
        return
    rep = verify_embedding(e, trials=30, seed=seed)
    assert rep.well_separated and rep.phi_partition and rep.root_singleton
    assert rep.backward_connectivity and rep.backward_cost and rep.backward_monotone
    assert rep.forward_monotone and rep.root_copies_property
    if shared:
        assert rep.forward_connectivity
