"""Online group Steiner tree/forest through copy tree embeddings, and water filling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .embedding import CopyTreeEmbedding, build_construction1
from .graph import TOL, RootedTree, WeightedGraph


class ContractViolation(RuntimeError):
    """A solver returned something that breaks its stated contract."""


class GreedyTreeSolver:
    """Buys the cheapest connection, counting already-bought edges as free."""

    def __init__(self, tree: RootedTree):
        self.tree = tree
        self.bought: set = set()

    @property
    def solution(self) -> frozenset:
        return frozenset(self.bought)

    def _residual_from_root(self) -> list[float]:
        t = self.tree
        res = [0.0] * t.n
        for x in t.order[1:]:
            res[x] = res[t.parent[x]] + (0.0 if x in self.bought else t.weight[x])
        return res

    def connect_group(self, nodes: Iterable[int]) -> frozenset:
        nodes = sorted(set(nodes))
        if not nodes:
            raise ValueError("group must be nonempty")
        res = self._residual_from_root()
        best = min(nodes, key=lambda x: (res[x], x))
        self.bought.update(self.tree.path_to_root(best))
        return self.solution

    def _residual_from(self, a: int) -> list[float]:
        t = self.tree
        res = [math.inf] * t.n
        res[a] = 0.0
        stack = [a]
        while stack:
            x = stack.pop()
            nbrs = [(c, c) for c in t.children[x]]
            if t.parent[x] >= 0:
                nbrs.append((t.parent[x], x))
            for y, edge in nbrs:
                if res[y] == math.inf:
                    res[y] = res[x] + (0.0 if edge in self.bought else t.weight[edge])
                    stack.append(y)
        return res

    def connect_pair(self, A: Iterable[int], B: Iterable[int]) -> frozenset:
        A, B = sorted(set(A)), sorted(set(B))
        if not A or not B:
            raise ValueError("pair sides must be nonempty")
        best = None
        for a in A:
            res = self._residual_from(a)
            b = min(B, key=lambda x: (res[x], x))
            if best is None or res[b] < best[0] - TOL:
                best = (res[b], a, b)
        self.bought.update(self.tree.path(best[1], best[2]))
        return self.solution


def greedy_tree_solver(tree: RootedTree, stream: Sequence) -> list[frozenset]:
    """Run the greedy solver on a stream of node groups or (A, B) pairs."""
    solver = GreedyTreeSolver(tree)
    out = []
    for item in stream:
        if isinstance(item, tuple) and len(item) == 2 and not isinstance(item[0], int):
            out.append(solver.connect_pair(*item))
        else:
            out.append(solver.connect_group(item))
    return out


@dataclass
class StepResult:
    t: int
    edges: frozenset
    cost: float
    feasible: bool
    tree_cost: float = 0.0
    extra: dict = field(default_factory=dict)


def _groups_feasible(g: WeightedGraph, r: int, H: frozenset, groups) -> bool:
    lab = g.component_labels(H)
    return all(any(lab[v] == lab[r] for v in grp) for grp in groups)


def _pairs_feasible(g: WeightedGraph, F: frozenset, pairs) -> bool:
    lab = g.component_labels(F)
    return all({lab[a] for a in A} & {lab[b] for b in B} for A, B in pairs)


def online_gst_driver(g, r, embedding: CopyTreeEmbedding, tree_algorithm=None, stream=()) -> list[StepResult]:
    solver = tree_algorithm if tree_algorithm is not None else GreedyTreeSolver(embedding.tree)
    tree = embedding.tree
    prev_tree: frozenset = frozenset()
    prev: frozenset = frozenset()
    seen = []
    out = []
    for t, group in enumerate(stream):
        group = sorted(set(group))
        if not group:
            raise ValueError(f"group {t} is empty")
        seen.append(group)
        sol = frozenset(solver.connect_group(embedding.lift(group)))
        if not prev_tree <= sol:
            raise ContractViolation(f"tree solver dropped edges at step {t}")
        conn = tree.root_component(sol)
        if not any(conn[x] for x in embedding.lift(group)):
            raise ContractViolation(f"tree solver left group {t} unconnected")
        H = embedding.backward(sol)
        if not prev <= H:
            raise ContractViolation(f"backward map is not monotone at step {t}")
        feasible = _groups_feasible(g, r, H, seen)
        if not feasible:
            raise ContractViolation(f"graph solution infeasible at step {t}")
        out.append(StepResult(t, H, g.weight(H), feasible, tree.edge_weight(sol)))
        prev_tree, prev = sol, H
    return out


def online_gsf_driver(g, embedding: CopyTreeEmbedding, tree_algorithm=None, stream=()) -> list[StepResult]:
    solver = tree_algorithm if tree_algorithm is not None else GreedyTreeSolver(embedding.tree)
    tree = embedding.tree
    prev_tree: frozenset = frozenset()
    prev: frozenset = frozenset()
    seen = []
    out = []
    for t, (A, B) in enumerate(stream):
        A, B = sorted(set(A)), sorted(set(B))
        if not A or not B:
            raise ValueError(f"pair {t} has an empty side")
        seen.append((A, B))
        LA, LB = embedding.lift(A), embedding.lift(B)
        sol = frozenset(solver.connect_pair(LA, LB))
        if not prev_tree <= sol:
            raise ContractViolation(f"tree solver dropped edges at step {t}")
        lab = tree.component_labels(sol)
        if not {lab[x] for x in LA} & {lab[x] for x in LB}:
            raise ContractViolation(f"tree solver left pair {t} unconnected")
        F = embedding.backward(sol)
        if not prev <= F:
            raise ContractViolation(f"backward map is not monotone at step {t}")
        feasible = _pairs_feasible(g, F, seen)
        if not feasible:
            raise ContractViolation(f"graph solution infeasible at step {t}")
        out.append(StepResult(t, F, g.weight(F), feasible, tree.edge_weight(sol)))
        prev_tree, prev = sol, F
    return out


def connection_target(f: int, epsilon: float) -> int:
    return max(0, math.ceil((1 - epsilon) * f - 1e-9))


class WaterFillState:
    def __init__(self, tree: RootedTree):
        self.tree = tree
        self.w = np.asarray(tree.weight, dtype=float)
        self.x = np.zeros(tree.n)

    def saturated(self) -> np.ndarray:
        sat = self.x >= self.w - TOL
        sat[self.tree.root] = True
        return sat

    def connected(self) -> list[bool]:
        t = self.tree
        sat = self.saturated()
        conn = [False] * t.n
        conn[t.root] = True
        for c in t.order[1:]:
            conn[c] = conn[t.parent[c]] and bool(sat[c])
        return conn

    @property
    def solution(self) -> frozenset:
        conn = self.connected()
        return frozenset(c for c in self.tree.edges if conn[c])

    @property
    def fractional_cost(self) -> float:
        return float(self.x.sum())


@dataclass
class FillStep:
    solution: frozenset
    touched: int
    target: int
    iterations: int
    saturations: list


def water_fill_reveal(state: WaterFillState, groups: Sequence[Iterable[int]], f: int, epsilon: float) -> FillStep:
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    groups = [frozenset(gr) for gr in groups]
    if any(not gr for gr in groups):
        raise ValueError("groups must be nonempty")
    if not 1 <= f <= len(groups):
        raise ValueError(f"requirement f={f} must lie in [1, {len(groups)}]")
    t = state.tree
    target = connection_target(f, epsilon)
    iterations = 0
    saturations = []
    while True:
        conn = state.connected()
        open_groups = [gr for gr in groups if not any(conn[v] for v in gr)]
        touched = len(groups) - len(open_groups)
        if touched >= target:
            return FillStep(state.solution, touched, target, iterations, saturations)
        sat = state.saturated()
        demand: dict[int, int] = {}
        for v in sorted(set().union(*open_groups)):
            x = v
            while sat[x]:
                x = t.parent[x]
            demand[x] = demand.get(x, 0) + 1
        edges = np.array(sorted(demand))
        rate = np.array([demand[e] for e in edges], dtype=float)
        slack = state.w[edges] - state.x[edges]
        delta = float(np.min(slack / rate))
        state.x[edges] += rate * delta
        hit = slack / rate <= delta + TOL
        state.x[edges[hit]] = state.w[edges[hit]]
        np.minimum(state.x, state.w, out=state.x)
        newly = int(np.sum(state.saturated() & ~sat))
        if newly < 1:
            raise ContractViolation("water filling made no progress")
        saturations.append(newly)
        iterations += 1


@dataclass
class PartialStep:
    t: int
    edges: frozenset
    cost: float
    connected: int
    target: int
    fractional_cost: float


def partial_gst_general(
    g: WeightedGraph,
    r: int,
    stream: Sequence,
    epsilon: float,
    embedding: CopyTreeEmbedding | None = None,
    embed_epsilon: float = 0.25,
) -> list[PartialStep]:
    """Online f-partial group Steiner tree on a general graph.

    ``stream`` holds (group, f) pairs. Each vertex of a group becomes the
    group of its copies on the merged-partial copy tree.
    """
    emb = embedding if embedding is not None else build_construction1(g, r, embed_epsilon)
    state = WaterFillState(emb.tree)
    prev: frozenset = frozenset()
    out = []
    for t, (group, f) in enumerate(stream):
        group = sorted(set(group))
        step = water_fill_reveal(state, [emb.phi[v] for v in group], f, epsilon)
        H = emb.backward(step.solution)
        if not prev <= H:
            raise ContractViolation(f"solution shrank at step {t}")
        lab = g.component_labels(H)
        count = sum(1 for v in group if lab[v] == lab[r])
        if count < step.target:
            raise ContractViolation(f"step {t} connects {count} < {step.target} vertices")
        out.append(PartialStep(t, H, g.weight(H), count, step.target, state.fractional_cost))
        prev = H
    return out


def groups_overlap(groups: Sequence[Iterable[int]]) -> bool:
    seen: set = set()
    for gr in groups:
        gr = set(gr)
        if seen & gr:
            return True
        seen |= gr
    return False


def make_groups_disjoint(g: WeightedGraph, groups: Sequence[Iterable[int]]):
    """Give every group private satellite vertices.

    Original weights are multiplied by n^3 and each satellite hangs off its
    vertex by a weight-1 edge. Returns (graph, groups, scale).
    """
    scale = float(g.n) ** 3
    edges = [(u, v, w * scale) for u, v, w in g.edges]
    n = g.n
    new_groups = []
    for gr in groups:
        sats = []
        for v in sorted(set(gr)):
            edges.append((v, n, 1.0))
            sats.append(n)
            n += 1
        new_groups.append(sats)
    return WeightedGraph(n, tuple(edges), g.root), new_groups, scale
