import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from copytree_embed.generators import random_connected_graph, random_tree
from copytree_embed.graph import (
    GraphError,
    RootedTree,
    WeightedGraph,
    ball,
    connected,
    euler_path_partition,
    is_well_separated,
    shortest_path_metric,
)


def test_rejects_bad_edges():
    with pytest.raises(GraphError):
        WeightedGraph(2, ((0, 0, 1.0),), 0)
    with pytest.raises(GraphError):
        WeightedGraph(2, ((0, 1, -1.0),), 0)
    with pytest.raises(GraphError):
        WeightedGraph(2, ((0, 2, 1.0),), 0)


def test_metric_on_path(path3):
    m = shortest_path_metric(path3)
    assert m.d[0, 2] == 3.0
    assert m.diameter == 3.0
    assert m.path_edges(0, 2) == m.path_edges(2, 0)
    assert set(m.path_edges(0, 2)) == {0, 1}


def test_disconnected_metric_rejected():
    g = WeightedGraph(3, ((0, 1, 1.0),), 0)
    with pytest.raises(GraphError, match="connected"):
        shortest_path_metric(g)


def test_ball_and_connected(path3):
    m = shortest_path_metric(path3)
    assert ball(m, 0, 1.0) == {0, 1}
    assert connected(path3, {0, 1}, {0}, {2})
    assert not connected(path3, {1}, {0}, {2})


def test_rooted_tree_basics(path3):
    t, edge_of = RootedTree.from_graph(path3, 0)
    assert t.root == 0
    assert t.distance(0, 2) == 3.0
    assert t.path_to_root(2) == [2, 1]
    assert t.steiner([0, 2]) == {1, 2}
    assert t.steiner([2]) == frozenset()
    assert edge_of == {1: 0, 2: 1}
    assert t.root_component({1}) == [True, True, False]


def test_from_graph_needs_tree():
    g = WeightedGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)), 0)
    with pytest.raises(GraphError):
        RootedTree.from_graph(g, 0)


def test_well_separated():
    # root 0 <- 1 (w 4) <- 2 (w 2)
    assert is_well_separated(RootedTree((-1, 0, 1), (0.0, 4.0, 2.0), (0, 1, 2)))
    assert not is_well_separated(RootedTree((-1, 0, 1), (0.0, 4.0, 3.0), (0, 1, 2)))


def test_euler_partition_walks_each_edge_twice(star_abc):
    paths = euler_path_partition(star_abc, {0, 1, 2}, {1, 2, 3})
    walked = sum(len(p) - 1 for p in paths)
    assert walked == 2 * 3
    for p in paths:
        assert p[0] in {1, 2, 3} and p[-1] in {1, 2, 3}


def test_euler_partition_needs_marked_leaves(star_abc):
    with pytest.raises(GraphError, match="leaf"):
        euler_path_partition(star_abc, {0, 1}, {0})


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(0, 10**6))
def test_metric_is_a_metric(n, seed):
    g = random_connected_graph(random.Random(seed), n)
    m = shortest_path_metric(g)
    assert np.allclose(m.d, m.d.T)
    assert np.all(np.diag(m.d) == 0)
    # triangle inequality
    assert np.all(m.d[:, :, None] <= m.d[:, None, :] + m.d.T[None, :, :] + 1e-9)
    for u in range(n):
        for v in range(u + 1, n):
            assert abs(g.weight(m.path_edges(u, v)) - m.d[u, v]) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10**6))
def test_tree_steiner_is_minimal_subtree(n, seed):
    rng = random.Random(seed)
    g = random_tree(rng, n)
    t, _ = RootedTree.from_graph(g, 0)
    nodes = rng.sample(range(n), rng.randint(1, n))
    S = t.steiner(nodes)
    lab = t.component_labels(S)
    assert len({lab[x] for x in nodes}) == 1
    # every edge is needed: dropping it separates the nodes
    for e in S:
        lab2 = t.component_labels(S - {e})
        assert len({lab2[x] for x in nodes}) > 1
