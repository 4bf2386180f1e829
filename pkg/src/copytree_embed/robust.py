"""Demand-robust group Steiner tree and forest: LPs, online rounding, solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .embedding import DemandRobustEmbedding, build_demand_robust
from .graph import TOL, RootedTree, WeightedGraph
from .lp import LinearProgram, LPSolution, solve_lp

GST = "gst"
GSF = "gsf"
COPY_CONSTANT = 4


@dataclass(frozen=True)
class Scenario:
    sigma: float
    groups: tuple = ()
    pairs: tuple = ()

    def __post_init__(self):
        if not self.sigma >= 1:
            raise ValueError(f"inflation factor must be at least 1, got {self.sigma}")
        object.__setattr__(self, "groups", tuple(frozenset(int(v) for v in g) for g in self.groups))
        object.__setattr__(
            self,
            "pairs",
            tuple((frozenset(int(v) for v in a), frozenset(int(v) for v in b)) for a, b in self.pairs),
        )
        if any(not g for g in self.groups) or any(not a or not b for a, b in self.pairs):
            raise ValueError("groups and pair sides must be nonempty")


@dataclass(frozen=True)
class RobustInstance:
    scenarios: tuple
    kind: str = GST

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if self.kind not in (GST, GSF):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        for s in self.scenarios:
            if (self.kind == GST and s.pairs) or (self.kind == GSF and s.groups):
                raise ValueError(f"scenario data does not match kind {self.kind}")

    @property
    def m(self) -> int:
        return len(self.scenarios)


@dataclass
class RobustSolution:
    X0: frozenset
    X: tuple
    meta: dict = field(default_factory=dict)


def map_robust_instance(inst: RobustInstance, emb) -> RobustInstance:
    if isinstance(emb, DemandRobustEmbedding) and inst.m > emb.scenarios:
        raise ValueError(f"embedding supports {emb.scenarios} scenarios, instance has {inst.m}")
    out = []
    for s in inst.scenarios:
        out.append(
            Scenario(
                s.sigma,
                tuple(emb.lift(g) for g in s.groups),
                tuple((emb.lift(a), emb.lift(b)) for a, b in s.pairs),
            )
        )
    return RobustInstance(tuple(out), inst.kind)


def _require_tree(tree) -> RootedTree:
    if not isinstance(tree, RootedTree):
        raise TypeError("LP construction needs a RootedTree")
    return tree


def _subtree_hits(tree: RootedTree, targets: Iterable[int]) -> list[bool]:
    """hit[x]: the subtree of x contains a target."""
    hit = [False] * tree.n
    for v in targets:
        hit[v] = True
    for x in reversed(tree.order):
        p = tree.parent[x]
        if p >= 0 and hit[x]:
            hit[p] = True
    return hit


def _flow_rows(lp: LinearProgram, tree: RootedTree, nodes: Sequence[int], top: int, targets: set,
               capacity, amount: dict, rhs: float, tag: str) -> None:
    """Flow from ``top`` into ``targets`` inside the subtree ``nodes`` (BFS order).

    ``capacity(c)`` gives the coefficient dict bounding the flow on edge c.
    The delivered flow minus ``amount`` must be at least ``rhs``.
    """
    inside = set(nodes)
    hit = {x: False for x in nodes}
    for x in reversed(nodes):
        if x in targets:
            hit[x] = True
        p = tree.parent[x]
        if x != top and hit[x]:
            hit[p] = True
    flow = {}
    for x in nodes:
        if x != top and hit[x]:
            flow[x] = lp.var(f"{tag}_e{x}")
    for c, var in flow.items():
        row = {var: 1.0}
        for j, a in capacity(c).items():
            row[j] = row.get(j, 0.0) - a
        lp.add(row, "<=", 0.0, f"{tag}_cap{c}")
    for x in nodes:
        if x == top or x not in flow:
            continue
        row = {flow[x]: 1.0}
        for c in tree.children[x]:
            if c in flow and c in inside:
                row[flow[c]] = -1.0
        lp.add(row, ">=" if x in targets else "==", 0.0, f"{tag}_cons{x}")
    row = {flow[c]: 1.0 for c in tree.children[top] if c in flow}
    for j, a in amount.items():
        row[j] = row.get(j, 0.0) - a
    lp.add(row, ">=", rhs, f"{tag}_out")


@dataclass
class GSTModel:
    lp: LinearProgram
    tree: RootedTree
    z: int
    x: dict  # (stage, edge) -> var index

    def values(self, sol: LPSolution, stage: int) -> np.ndarray:
        out = np.zeros(self.tree.n)
        for (i, c), j in self.x.items():
            if i == stage:
                out[c] = sol.x[j]
        return out


def build_lp_gst(tree: RootedTree, inst: RobustInstance) -> GSTModel:
    tree = _require_tree(tree)
    if inst.kind != GST:
        raise ValueError("build_lp_gst needs group scenarios")
    lp = LinearProgram("LP_GST")
    z = lp.var("z", cost=1.0)
    x = {}
    for c in tree.edges:
        x[(0, c)] = lp.var(f"x0_{c}")
    root = tree.root
    for i, s in enumerate(inst.scenarios, start=1):
        need = [False] * tree.n
        for g in s.groups:
            if root in g:
                continue
            for a, h in enumerate(_subtree_hits(tree, g)):
                need[a] = need[a] or h
        for c in tree.edges:
            if need[c]:
                x[(i, c)] = lp.var(f"x{i}_{c}")
        for j, g in enumerate(s.groups):
            if root in g:
                continue
            _flow_rows(
                lp, tree, tree.order, root, set(g),
                lambda c, i=i: {x[(0, c)]: 1.0, x[(i, c)]: 1.0}, {}, 1.0, f"f{i}_{j}",
            )
        row = {x[(0, c)]: tree.weight[c] for c in tree.edges}
        for c in tree.edges:
            if (i, c) in x:
                row[x[(i, c)]] = s.sigma * tree.weight[c]
        row[z] = -1.0
        lp.add(row, "<=", 0.0, f"cost{i}")
    for c in tree.edges:
        p = tree.parent[c]
        if tree.parent[p] >= 0:
            lp.add({x[(0, p)]: 1.0, x[(0, c)]: -1.0}, ">=", 0.0, f"mono{c}")
    return GSTModel(lp, tree, z, x)


class LayeredForest:
    """Depth-truncated copies G_0..G_D of a rooted tree.

    Forest edge k is copy ``layer[k]`` of tree edge ``orig[k]``; its parent
    forest edge is ``parent_edge[k]`` (-1 when it hangs off its layered
    tree's root ``top[k]``).
    """

    def __init__(self, tree: RootedTree):
        self.tree = tree
        depth = tree.depth
        self.D = max(depth)
        self.layer, self.orig, self.top, self.parent_edge = [], [], [], []
        self.index = {}
        for l in range(self.D + 1):
            for c in tree.order:
                if depth[c] < l + 1:
                    continue
                k = len(self.orig)
                self.index[(l, c)] = k
                self.layer.append(l)
                self.orig.append(c)
                p = tree.parent[c]
                if depth[p] >= l + 1:
                    self.parent_edge.append(self.index[(l, p)])
                    self.top.append(self.top[self.index[(l, p)]])
                else:
                    self.parent_edge.append(-1)
                    self.top.append(p)
        self.trees = [(l, x) for l in range(self.D + 1) for x in tree.order if depth[x] == l]

    @property
    def size(self) -> int:
        return len(self.orig)

    def subtree_nodes(self, x: int) -> list[int]:
        out = [x]
        for y in out:
            out.extend(self.tree.children[y])
        return out


@dataclass
class GSFModel:
    lp: LinearProgram
    forest: LayeredForest
    z: int
    x: dict  # (stage, forest edge) -> var index

    def values(self, sol: LPSolution, stage: int) -> np.ndarray:
        out = np.zeros(self.forest.size)
        for (i, k), j in self.x.items():
            if i == stage:
                out[k] = sol.x[j]
        return out


def build_lp_gsf(tree: RootedTree, inst: RobustInstance) -> GSFModel:
    tree = _require_tree(tree)
    if inst.kind != GSF:
        raise ValueError("build_lp_gsf needs pair scenarios")
    forest = LayeredForest(tree)
    lp = LinearProgram("LP_GSF")
    z = lp.var("z", cost=1.0)
    x = {}
    for k in range(forest.size):
        x[(0, k)] = lp.var(f"x0_l{forest.layer[k]}_{forest.orig[k]}")
    subtree = {x_: forest.subtree_nodes(x_) for x_ in tree.order}
    for i, s in enumerate(inst.scenarios, start=1):
        plans = []
        for j, (A, B) in enumerate(s.pairs):
            total = {}
            for l, top in forest.trees:
                nodes = subtree[top]
                inside = set(nodes)
                if not (inside & A and inside & B):
                    continue
                f = lp.var(f"f_l{l}_t{top}_s{i}_p{j}", ub=1.0)
                total[f] = 1.0
                for side, targets in (("a", A), ("b", B)):
                    if top in targets:
                        continue
                    plans.append((l, top, nodes, set(targets), f, f"q{i}_{j}_l{l}_t{top}{side}"))
            lp.add(total, ">=", 1.0, f"pair{i}_{j}")
        used = set()
        for l, top, nodes, targets, _, _ in plans:
            hit = _subtree_hits(tree, targets)
            for c in nodes:
                if c != top and hit[c]:
                    used.add(forest.index[(l, c)])
        for k in sorted(used):
            x[(i, k)] = lp.var(f"x{i}_l{forest.layer[k]}_{forest.orig[k]}")
        for l, top, nodes, targets, f, tag in plans:
            _flow_rows(
                lp, tree, nodes, top, targets,
                lambda c, l=l, i=i: {x[(0, forest.index[(l, c)])]: 1.0, x[(i, forest.index[(l, c)])]: 1.0},
                {f: 1.0}, 0.0, tag,
            )
        row = {x[(0, k)]: tree.weight[forest.orig[k]] for k in range(forest.size)}
        for k in sorted(used):
            row[x[(i, k)]] = s.sigma * tree.weight[forest.orig[k]]
        row[z] = -1.0
        lp.add(row, "<=", 0.0, f"cost{i}")
    for k in range(forest.size):
        p = forest.parent_edge[k]
        if p >= 0:
            lp.add({x[(0, p)]: 1.0, x[(0, k)]: -1.0}, ">=", 0.0, f"mono{k}")
    return GSFModel(lp, forest, z, x)


class RoundingState:
    """Online dependent rounding on a forest, run for many copies at once.

    Edge e (with parent edge p, or none at a tree top) joins F only while p is
    in F. When the fractional values rise from y to y', a missing edge whose
    parent is present joins with probability (y'_e - y_e) / (y'_p - y_e), with
    y'_p = 1 at a top. By induction from the top, Pr[e in F] = y'_e after
    every feed, and F never loses an edge.
    """

    def __init__(self, parent_edge: Sequence[int], rng: np.random.Generator, copies: int = 1):
        self.parent = np.asarray(parent_edge, dtype=np.int64)
        size = len(self.parent)
        depth = np.zeros(size, dtype=np.int64)
        for e in range(size):
            p, d = self.parent[e], 0
            while p >= 0:
                d += 1
                p = self.parent[p]
            depth[e] = d
        self.layers = [np.nonzero(depth == d)[0] for d in range(int(depth.max(initial=-1)) + 1)]
        self.rng = rng
        self.copies = copies
        self.y = np.zeros(size)
        self.F = np.zeros((copies, size), dtype=bool)

    def fork(self, rng: np.random.Generator) -> "RoundingState":
        other = object.__new__(RoundingState)
        other.parent, other.layers, other.copies = self.parent, self.layers, self.copies
        other.rng = rng
        other.y = self.y.copy()
        other.F = self.F.copy()
        return other

    def check(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != self.y.shape:
            raise ValueError("edge vector has the wrong length")
        if np.any(y < -TOL) or np.any(y > 1 + TOL):
            raise ValueError("edge values must lie in [0, 1]")
        if np.any(y < self.y - TOL):
            raise ValueError("edge values must not decrease between feeds")
        has = self.parent >= 0
        if np.any(y[has] > y[self.parent[has]] + TOL):
            raise ValueError("edge values must decrease along root-leaf paths")
        y = np.clip(y, 0.0, 1.0)
        return np.maximum(y, self.y)

    def feed(self, y) -> np.ndarray:
        """Advance to y; returns the (copies, edges) membership matrix."""
        y = self.check(y)
        for edges in self.layers:
            par = self.parent[edges]
            top = par < 0
            py = np.where(top, 1.0, y[np.maximum(par, 0)])
            den = py - self.y[edges]
            num = y[edges] - self.y[edges]
            q = np.where(den > 0, np.clip(num / np.where(den > 0, den, 1.0), 0.0, 1.0), 0.0)
            ready = np.where(top[None, :], True, self.F[:, np.maximum(par, 0)])
            coin = self.rng.random((self.copies, len(edges))) < q[None, :]
            self.F[:, edges] |= ready & coin & ~self.F[:, edges]
        self.y = y
        return self.F


def round_online(state: RoundingState, y) -> frozenset:
    """Feed one vector and return the union of the copies' integral sets."""
    F = state.feed(y)
    return frozenset(int(e) for e in np.nonzero(F.any(axis=0))[0])


def repair(y: np.ndarray, parent_edge: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Cap at 1, then lower every edge above its parent, top-down."""
    y = np.minimum(np.asarray(y, dtype=float), 1.0)
    y = np.maximum(y, 0.0)
    for e in order:
        p = parent_edge[e]
        if p >= 0 and y[e] > y[p]:
            y[e] = y[p]
    return y


def gst_copies(n: int, C: int = COPY_CONSTANT) -> int:
    return C * max(1, math.ceil(math.log2(max(n, 2)) ** 2 - 1e-9))


def gsf_copies(n: int, C: int = COPY_CONSTANT) -> int:
    return C * max(1, math.ceil(math.log2(max(n, 2)) ** 3 - 1e-9))


def _tree_space(tree: RootedTree):
    edges = list(tree.edges)
    pos = {c: k for k, c in enumerate(edges)}
    parent_edge = [pos.get(tree.parent[c], -1) for c in edges]
    order = sorted(range(len(edges)), key=lambda k: tree.depth[edges[k]])
    return edges, parent_edge, order


def _gst_feasible(tree: RootedTree, edges: Iterable[int], scenario: Scenario) -> bool:
    conn = tree.root_component(edges)
    return all(any(conn[v] for v in g) for g in scenario.groups)


def _gsf_feasible(tree: RootedTree, edges: Iterable[int], scenario: Scenario) -> bool:
    lab = tree.component_labels(edges)
    return all({lab[a] for a in A} & {lab[b] for b in B} for A, B in scenario.pairs)


def round_robust_gst(tree: RootedTree, model: GSTModel, sol: LPSolution, inst: RobustInstance,
                     copies: int | None = None, rng=None, retries: int = 5) -> RobustSolution:
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    copies = gst_copies(tree.n) if copies is None else copies
    edges, parent_edge, order = _tree_space(tree)
    x0 = repair(model.values(sol, 0)[edges], parent_edge, order)
    feeds = []
    for i in range(1, inst.m + 1):
        y1 = repair(x0 + model.values(sol, i)[edges], parent_edge, order)
        feeds.append(np.maximum(y1, x0))
    for attempt in range(retries + 1):
        state = RoundingState(parent_edge, rng, copies)
        first = state.feed(x0).any(axis=0)
        X0 = frozenset(edges[k] for k in np.nonzero(first)[0])
        Xs, ok = [], []
        for i, y1 in enumerate(feeds):
            second = state.fork(rng).feed(y1).any(axis=0) & ~first
            Xi = frozenset(edges[k] for k in np.nonzero(second)[0])
            Xs.append(Xi)
            ok.append(_gst_feasible(tree, X0 | Xi, inst.scenarios[i]))
        if all(ok):
            break
    return RobustSolution(X0, tuple(Xs), {"attempts": attempt + 1, "feasible": ok, "copies": copies})


def round_robust_gsf(tree: RootedTree, model: GSFModel, sol: LPSolution, inst: RobustInstance,
                     copies: int | None = None, rng=None, retries: int = 5) -> RobustSolution:
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    copies = gsf_copies(tree.n) if copies is None else copies
    forest = model.forest
    order = sorted(range(forest.size), key=lambda k: (forest.layer[k], tree.depth[forest.orig[k]]))
    x0 = repair(model.values(sol, 0), forest.parent_edge, order)
    feeds = []
    for i in range(1, inst.m + 1):
        y1 = repair(x0 + model.values(sol, i), forest.parent_edge, order)
        feeds.append(np.maximum(y1, x0))
    orig = np.asarray(forest.orig)
    for attempt in range(retries + 1):
        state = RoundingState(forest.parent_edge, rng, copies)
        first = state.feed(x0).any(axis=0)
        X0 = frozenset(int(c) for c in orig[first])
        Xs, ok = [], []
        for i, y1 in enumerate(feeds):
            chosen = state.fork(rng).feed(y1).any(axis=0)
            both = frozenset(int(c) for c in orig[chosen])
            Xs.append(both - X0)
            ok.append(_gsf_feasible(tree, both | X0, inst.scenarios[i]))
        if all(ok):
            break
    return RobustSolution(X0, tuple(Xs), {"attempts": attempt + 1, "feasible": ok, "copies": copies})


def solve_robust_tree(tree: RootedTree, inst: RobustInstance, seed: int = 0, copies: int | None = None,
                      retries: int = 5, C: int = COPY_CONSTANT) -> RobustSolution:
    """LP relaxation plus rounding on a rooted tree. Edge ids are tree nodes."""
    if inst.m == 0:
        return RobustSolution(frozenset(), (), {"z": 0.0, "feasible": []})
    rng = np.random.default_rng(seed)
    if inst.kind == GST:
        model = build_lp_gst(tree, inst)
        sol = solve_lp(model.lp)
        copies = gst_copies(tree.n, C) if copies is None else copies
        out = round_robust_gst(tree, model, sol, inst, copies, rng, retries)
    else:
        model = build_lp_gsf(tree, inst)
        sol = solve_lp(model.lp)
        copies = gsf_copies(tree.n, C) if copies is None else copies
        out = round_robust_gsf(tree, model, sol, inst, copies, rng, retries)
    out.meta["z"] = sol.objective
    out.meta["lp"] = model.lp
    return out


def solve_robust_general(g: WeightedGraph, r: int, inst: RobustInstance, kind: str | None = None,
                         seed: int = 0, copies: int | None = None, retries: int = 5,
                         C: int = COPY_CONSTANT) -> RobustSolution:
    kind = inst.kind if kind is None else {"tree": GST, "forest": GSF}.get(kind, kind)
    if kind != inst.kind:
        raise ValueError(f"instance kind {inst.kind} does not match {kind}")
    if inst.m == 0:
        return RobustSolution(frozenset(), (), {"z": 0.0, "feasible": []})
    emb = build_demand_robust(g, r, inst.m, seed)
    lifted = map_robust_instance(inst, emb)
    tree_sol = solve_robust_tree(emb.tree, lifted, seed, copies, retries, C)
    X0 = emb.backward(tree_sol.X0)
    Xs = tuple(emb.backward(Xi) - X0 for Xi in tree_sol.X)
    sol = RobustSolution(X0, Xs, dict(tree_sol.meta))
    sol.meta["tree_X0"] = tree_sol.X0
    sol.meta["tree_X"] = tree_sol.X
    sol.meta["embedding"] = emb
    sol.meta["tree_cost"] = [
        emb.tree.edge_weight(tree_sol.X0) + s.sigma * emb.tree.edge_weight(Xi)
        for s, Xi in zip(inst.scenarios, tree_sol.X)
    ]
    _, sol.meta["feasible"] = evaluate_robust(g, sol, inst, r)
    return sol


def evaluate_robust(g: WeightedGraph, sol: RobustSolution, inst: RobustInstance, r: int | None = None):
    """Worst-case cost max_i w(X0) + sigma_i w(Xi) and per-scenario feasibility."""
    if len(sol.X) != inst.m:
        raise ValueError("solution has the wrong number of second-stage sets")
    r = g.root if r is None else r
    w0 = g.weight(sol.X0)
    worst = 0.0
    feasible = []
    for s, Xi in zip(inst.scenarios, sol.X):
        worst = max(worst, w0 + s.sigma * g.weight(Xi))
        lab = g.component_labels(sol.X0 | Xi)
        if inst.kind == GST:
            feasible.append(all(any(lab[v] == lab[r] for v in grp) for grp in s.groups))
        else:
            feasible.append(all({lab[a] for a in A} & {lab[b] for b in B} for A, B in s.pairs))
    return worst, feasible
