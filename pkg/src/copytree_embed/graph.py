"""Weighted graphs, rooted trees, shortest-path metrics and connectivity."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

TOL = 1e-9


class GraphError(ValueError):
    """Raised for malformed or unsupported graphs."""


class DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra < rb:
            ra, rb = rb, ra
        self.parent[ra] = rb
        return True

    def labels(self) -> list[int]:
        return [self.find(x) for x in range(len(self.parent))]


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    n: int
    edges: tuple
    root: int | None = None

    def __post_init__(self):
        edges = tuple((int(u), int(v), float(w)) for u, v, w in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n < 1:
            raise GraphError("graph needs at least one vertex")
        for idx, (u, v, w) in enumerate(edges):
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge {idx}: vertex id out of range [0, {self.n})")
            if u == v:
                raise GraphError(f"edge {idx}: self-loop on vertex {u}")
            if not np.isfinite(w) or w <= 0:
                raise GraphError(f"edge {idx}: weight must be positive and finite, got {w}")
        if self.root is not None and not 0 <= self.root < self.n:
            raise GraphError(f"root {self.root} out of range")

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple:
        adj = [[] for _ in range(self.n)]
        for idx, (u, v, _) in enumerate(self.edges):
            adj[u].append((v, idx))
            adj[v].append((u, idx))
        return tuple(tuple(sorted(a)) for a in adj)

    def weight(self, F: Iterable[int]) -> float:
        return float(sum(self.edges[e][2] for e in F))

    def component_labels(self, F: Iterable[int] = None) -> list[int]:
        dsu = DisjointSet(self.n)
        for e in range(self.m) if F is None else F:
            u, v, _ = self.edges[e]
            dsu.union(u, v)
        return dsu.labels()

    def is_connected(self) -> bool:
        return len(set(self.component_labels())) == 1

    def check_edge_set(self, F: Iterable[int]) -> frozenset:
        F = frozenset(int(e) for e in F)
        bad = [e for e in F if not 0 <= e < self.m]
        if bad:
            raise GraphError(f"edge ids out of range: {sorted(bad)[:5]}")
        return F


@dataclass(frozen=True, eq=False)
class Metric:
    d: np.ndarray
    diameter: float
    graph: WeightedGraph | None = None
    _paths: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def path_edges(self, u: int, v: int) -> tuple:
        """Edge ids of one shortest u-v path in the underlying graph.

        Walks back from the larger endpoint, always stepping to the smallest
        neighbour id that lies on a shortest path, so the choice is fixed.
        """
        if u == v:
            return ()
        a, b = (u, v) if u < v else (v, u)
        key = (a, b)
        hit = self._paths.get(key)
        if hit is not None:
            return hit
        g = self.graph
        if g is None:
            raise GraphError("metric has no graph attached")
        d = self.d[a]
        out = []
        x = b
        while x != a:
            step = None
            for y, e in g.adjacency[x]:
                if abs(d[y] + g.edges[e][2] - d[x]) <= TOL and d[y] < d[x]:
                    step = (y, e)
                    break
            if step is None:
                raise GraphError("inconsistent distance table")
            x = step[0]
            out.append(step[1])
        res = tuple(sorted(out))
        self._paths[key] = res
        return res


def shortest_path_metric(g: WeightedGraph) -> Metric:
    if not g.is_connected():
        raise GraphError("graph must be connected")
    n = g.n
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for u, v, w in g.edges:
        if w < d[u, v]:
            d[u, v] = d[v, u] = w
    for k in range(n):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return Metric(d=d, diameter=float(d.max()), graph=g)


def ball(m: Metric, v: int, x: float) -> frozenset:
    if x < 0:
        raise ValueError("ball radius must be nonnegative")
    return frozenset(int(u) for u in np.nonzero(m.d[v] <= x + TOL)[0])


def connected(g: WeightedGraph, F: Iterable[int], U: Iterable[int], W: Iterable[int]) -> bool:
    U, W = set(U), set(W)
    if not U or not W:
        raise ValueError("vertex sets must be nonempty")
    lab = g.component_labels(F)
    return bool({lab[u] for u in U} & {lab[w] for w in W})


def euler_path_partition(g: WeightedGraph, F: Iterable[int], marked: Iterable[int]) -> list[tuple]:
    """Split the doubled tree F into paths whose endpoints are all marked.

    Returns vertex sequences. Every edge of F is walked exactly twice overall.
    """
    F = sorted(g.check_edge_set(F))
    marked = set(marked)
    if not F:
        return []
    adj: dict[int, list[int]] = {}
    for e in F:
        u, v, _ = g.edges[e]
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    dsu = DisjointSet(g.n)
    for e in F:
        u, v, _ = g.edges[e]
        if not dsu.union(u, v):
            raise GraphError("edge set is not acyclic")
    if len({dsu.find(x) for x in adj}) != 1:
        raise GraphError("edge set is not connected")
    leaves = [x for x, nb in adj.items() if len(nb) == 1 and x not in marked]
    if leaves:
        raise GraphError(f"leaf {min(leaves)} is not marked; prune it first")
    start = min(x for x in adj if x in marked)
    for x in adj:
        adj[x].sort()
    # iterative DFS tour of the doubled tree
    tour = [start]
    stack = [(start, -1, iter(adj[start]))]
    while stack:
        x, par, it = stack[-1]
        nxt = next((y for y in it if y != par), None)
        if nxt is None:
            stack.pop()
            if stack:
                tour.append(stack[-1][0])
        else:
            tour.append(nxt)
            stack.append((nxt, x, iter(adj[nxt])))
    paths = []
    cur = [tour[0]]
    for x in tour[1:]:
        cur.append(x)
        if x in marked:
            paths.append(tuple(cur))
            cur = [x]
    return paths


@dataclass(frozen=True, eq=False)
class RootedTree:
    """Rooted tree stored by parent pointers.

    The edge from node ``c`` to its parent is identified by ``c`` itself, so
    edge sets on a tree are sets of non-root node ids.
    """

    parent: tuple
    weight: tuple
    label: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "parent", tuple(int(p) for p in self.parent))
        object.__setattr__(self, "weight", tuple(float(w) for w in self.weight))
        if self.label is not None:
            object.__setattr__(self, "label", tuple(int(x) for x in self.label))
            if len(self.label) != len(self.parent):
                raise GraphError("label length mismatch")
        if len(self.weight) != len(self.parent):
            raise GraphError("weight length mismatch")
        roots = [x for x, p in enumerate(self.parent) if p < 0]
        if len(roots) != 1:
            raise GraphError("tree must have exactly one root")
        if len(self.order) != len(self.parent):
            raise GraphError("parent pointers contain a cycle")

    @property
    def n(self) -> int:
        return len(self.parent)

    @cached_property
    def root(self) -> int:
        return self.parent.index(-1)

    @cached_property
    def children(self) -> tuple:
        ch = [[] for _ in self.parent]
        for x, p in enumerate(self.parent):
            if p >= 0:
                if not 0 <= p < len(self.parent):
                    raise GraphError(f"parent {p} out of range")
                ch[p].append(x)
        return tuple(tuple(c) for c in ch)

    @cached_property
    def order(self) -> tuple:
        """Nodes in BFS order from the root."""
        out = [self.root]
        i = 0
        while i < len(out):
            out.extend(self.children[out[i]])
            i += 1
        return tuple(out)

    @cached_property
    def depth(self) -> tuple:
        dep = [0] * self.n
        for x in self.order[1:]:
            dep[x] = dep[self.parent[x]] + 1
        return tuple(dep)

    @cached_property
    def root_distance(self) -> tuple:
        dist = [0.0] * self.n
        for x in self.order[1:]:
            dist[x] = dist[self.parent[x]] + self.weight[x]
        return tuple(dist)

    @cached_property
    def edges(self) -> tuple:
        return tuple(x for x in range(self.n) if self.parent[x] >= 0)

    def edge_weight(self, F: Iterable[int]) -> float:
        return float(sum(self.weight[c] for c in F))

    def path_to_root(self, x: int) -> list[int]:
        out = []
        while self.parent[x] >= 0:
            out.append(x)
            x = self.parent[x]
        return out

    def path(self, a: int, b: int) -> list[int]:
        up_a, up_b = self.path_to_root(a), self.path_to_root(b)
        while up_a and up_b and up_a[-1] == up_b[-1]:
            up_a.pop()
            up_b.pop()
        return up_a + up_b

    def distance(self, a: int, b: int) -> float:
        return self.edge_weight(self.path(a, b))

    def steiner(self, nodes: Iterable[int]) -> frozenset:
        """Edges of the minimal subtree spanning ``nodes``."""
        nodes = set(nodes)
        if len(nodes) < 2:
            return frozenset()
        count = [0] * self.n
        for x in nodes:
            count[x] = 1
        total = len(nodes)
        out = []
        for x in reversed(self.order):
            p = self.parent[x]
            if p >= 0:
                if 0 < count[x] < total:
                    out.append(x)
                count[p] += count[x]
        return frozenset(out)

    def root_component(self, F: Iterable[int]) -> list[bool]:
        F = set(F)
        conn = [False] * self.n
        conn[self.root] = True
        for x in self.order[1:]:
            conn[x] = conn[self.parent[x]] and x in F
        return conn

    def component_labels(self, F: Iterable[int]) -> list[int]:
        dsu = DisjointSet(self.n)
        for c in F:
            dsu.union(c, self.parent[c])
        return dsu.labels()

    def as_graph(self) -> WeightedGraph:
        """The tree as a WeightedGraph whose edge ``i`` is ``self.edges[i]``."""
        return WeightedGraph(
            self.n, tuple((c, self.parent[c], self.weight[c]) for c in self.edges), self.root
        )

    @classmethod
    def from_graph(cls, g: WeightedGraph, root: int | None = None):
        """Root a tree-shaped graph. Returns (tree, graph edge id per tree edge)."""
        root = g.root if root is None else root
        if root is None:
            raise GraphError("tree needs a root")
        if g.m != g.n - 1 or not g.is_connected():
            raise GraphError("graph is not a tree")
        parent = [-1] * g.n
        weight = [0.0] * g.n
        edge_of = {}
        seen = [False] * g.n
        seen[root] = True
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for y, e in g.adjacency[x]:
                if not seen[y]:
                    seen[y] = True
                    parent[y] = x
                    weight[y] = g.edges[e][2]
                    edge_of[y] = e
                    queue.append(y)
        return cls(tuple(parent), tuple(weight), tuple(range(g.n))), edge_of


def is_well_separated(t: RootedTree) -> bool:
    for c in t.edges:
        p = t.parent[c]
        if t.parent[p] >= 0 and t.weight[c] > t.weight[p] / 2 + TOL:
            return False
    return True
