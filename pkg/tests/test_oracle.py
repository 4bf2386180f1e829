import random

import pytest
from hypothesis import given, settings, strategies as st

from copytree_embed.generators import random_groups, random_tree
from copytree_embed.graph import RootedTree, WeightedGraph
from copytree_embed.oracle import (
    BudgetExceeded,
    gst_tree_dp,
    label_table,
    opt_group_steiner_forest,
    opt_group_steiner_tree,
    opt_robust,
    opt_two_level_partial,
)
from copytree_embed.robust import RobustInstance, Scenario


def test_path_gst(path3):
    res = opt_group_steiner_tree(path3, 0, [[2]])
    assert res.cost == 3.0 and res.edges == {0, 1}


def test_star_group(star_abc):
    assert opt_group_steiner_tree(star_abc, 0, [[1, 3]]).cost == 1.0
    assert opt_two_level_partial(star_abc, 0, [[[1], [2], [3]]], [2]).cost == 2.0


def test_forest_shared_vertex(path3):
    assert opt_group_steiner_forest(path3, [([1], [1, 2])]).cost == 0.0


def test_label_table_matches_components(star_abc):
    L = label_table(star_abc)
    for mask in range(1 << star_abc.m):
        F = [b for b in range(star_abc.m) if mask >> b & 1]
        lab = star_abc.component_labels(F)
        for u in range(4):
            for v in range(4):
                assert (L[mask, u] == L[mask, v]) == (lab[u] == lab[v])


def test_budget():
    edges = tuple((i, i + 1, 1.0) for i in range(25))
    g = WeightedGraph(26, edges, 0)
    with pytest.raises(BudgetExceeded):
        opt_group_steiner_tree(g, 0, [[25]])
    inst = RobustInstance(tuple(Scenario(1.0, groups=[[1]]) for _ in range(4)))
    with pytest.raises(BudgetExceeded):
        opt_robust(WeightedGraph(2, ((0, 1, 1.0),), 0), 0, inst)


def test_robust_hand_values():
    g = WeightedGraph(2, ((0, 1, 1.0),), 0)
    assert opt_robust(g, 0, RobustInstance((Scenario(2.0, groups=[[1]]),))).cost == 1.0
    assert opt_robust(g, 0, RobustInstance(())).cost == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10**6))
def test_tree_dp_agrees_with_enumeration(n, seed):
    rng = random.Random(seed)
    g = random_tree(rng, n)
    groups = random_groups(rng, n, rng.randint(1, 4))
    t, _ = RootedTree.from_graph(g, 0)
    assert abs(gst_tree_dp(t, groups) - opt_group_steiner_tree(g, 0, groups).cost) < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_robust_optimum_beats_simple_strategies(n, seed):
    rng = random.Random(seed)
    g = random_tree(rng, n)
    scen = tuple(Scenario(rng.uniform(1, 5), groups=random_groups(rng, n, 2)) for _ in range(2))
    opt = opt_robust(g, 0, RobustInstance(scen))
    # buying everything up front is always feasible
    assert opt.cost <= g.weight(range(g.m)) + 1e-9
    # waiting costs sigma times the per-scenario optimum
    wait = max(s.sigma * opt_group_steiner_tree(g, 0, s.groups).cost for s in scen)
    assert opt.cost <= wait + 1e-9
