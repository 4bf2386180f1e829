"""Partial tree embeddings and copy tree embeddings built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .decomposition import (
    CuttingDraw,
    GoodStartError,
    HierarchicalDecomposition,
    _hst,
    calibrate_alpha,
    decomposition_from,
    default_tau,
    padded_family,
    padded_mask,
    uniform,
)
from .graph import TOL, DisjointSet, GraphError, Metric, RootedTree, WeightedGraph, is_well_separated, shortest_path_metric

MERGED_PARTIAL = "merged-partial"
FRT_SUPPORT = "frt-support"
DEMAND_ROBUST = "demand-robust"


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PartialTreeEmbedding:
    """Tree on a vertex subset; node ``i`` stands for vertex ``tree.label[i]``."""

    metric: Metric
    tree: RootedTree
    vertices: tuple
    gamma: float

    @cached_property
    def node_of(self) -> dict:
        return {v: i for i, v in enumerate(self.tree.label)}

    def signature(self) -> tuple:
        return (self.tree.parent, self.tree.weight, self.tree.label)


def _contract(hd: HierarchicalDecomposition, keep: set, r: int):
    parent, weight, _ = _hst(hd)
    n = hd.n
    size = len(parent)
    children = [[] for _ in range(size)]
    top = -1
    for x, p in enumerate(parent):
        if p < 0:
            top = x
        else:
            children[p].append(x)
    order = [top]
    for x in order:
        order.extend(children[x])
    lab: list = [None] * size
    for x in reversed(order):
        if x < n:
            lab[x] = x if x in keep else None
        else:
            found = [lab[c] for c in children[x] if lab[c] is not None]
            lab[x] = r if r in found else (min(found) if found else None)
    verts = sorted(keep)
    idx = {v: i for i, v in enumerate(verts)}
    t_parent = [-1] * len(verts)
    t_weight = [0.0] * len(verts)
    for x in order[1:]:
        if lab[x] is None:
            continue
        up = lab[parent[x]]
        if up != lab[x]:
            t_parent[idx[lab[x]]] = idx[up]
            t_weight[idx[lab[x]]] = 4.0 * weight[x]
    return RootedTree(tuple(t_parent), tuple(t_weight), tuple(verts))


def _stretch(m: Metric, tree: RootedTree) -> float:
    worst = 1.0
    for a, b in combinations(range(tree.n), 2):
        d = m.d[tree.label[a], tree.label[b]]
        worst = max(worst, float(tree.distance(a, b) / d))
    return worst


def partial_tree_from(m: Metric, hd: HierarchicalDecomposition, r: int, alpha: float) -> PartialTreeEmbedding:
    keep = {int(v) for v in np.nonzero(padded_mask(m, hd, alpha))[0]}
    if r not in keep:
        raise EmbeddingError(f"root {r} is not {alpha}-padded in this decomposition")
    tree = _contract(hd, keep, r)
    return PartialTreeEmbedding(m, tree, tree.label, _stretch(m, tree))


def frt_tree_from(m: Metric, hd: HierarchicalDecomposition, r: int) -> PartialTreeEmbedding:
    """Full tree embedding (every vertex kept) from one cutting draw."""
    tree = _contract(hd, set(range(m.n)), r)
    return PartialTreeEmbedding(m, tree, tree.label, float("nan"))


def _component_nodes(g: WeightedGraph, F: frozenset) -> list[list[int]]:
    """Vertex lists of the components of (V, F) that contain at least one edge."""
    lab = g.component_labels(F)
    groups: dict[int, list[int]] = {}
    for e in F:
        for v in g.edges[e][:2]:
            groups.setdefault(lab[v], []).append(v)
    return [sorted(set(vs)) for _, vs in sorted(groups.items())]


def _project(p: PartialTreeEmbedding, comps: list[list[int]]) -> frozenset:
    node_of = p.node_of
    out: set = set()
    for comp in comps:
        out |= p.tree.steiner(node_of[v] for v in comp if v in node_of)
    return frozenset(out)


def project_to_tree(p: PartialTreeEmbedding, F: Iterable[int]) -> frozenset:
    g = p.metric.graph
    F = g.check_edge_set(F)
    return _project(p, _component_nodes(g, F)) if F else frozenset()


def project_to_graph(p: PartialTreeEmbedding, Fp: Iterable[int]) -> frozenset:
    return _backward(p.metric, p.tree, Fp)


def _backward(m: Metric, tree: RootedTree, Fp: Iterable[int]) -> frozenset:
    out: set = set()
    for c in Fp:
        p = tree.parent[c]
        if p < 0:
            raise GraphError(f"node {c} is the root, not an edge")
        out.update(m.path_edges(tree.label[c], tree.label[p]))
    return frozenset(out)


@dataclass(frozen=True, eq=False)
class CopyTreeEmbedding:
    """A single rooted tree over copies of graph vertices.

    ``tree.label[x]`` is the vertex that copy ``x`` belongs to, ``phi[v]``
    lists the copies of ``v`` and ``provenance[x]`` the constituent tree the
    copy came from (-1 for the shared root).
    """

    graph: WeightedGraph
    metric: Metric
    root: int
    tree: RootedTree
    phi: tuple
    construction: str
    provenance: tuple
    constituents: tuple
    node_maps: tuple
    alpha_nominal: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def chi(self) -> int:
        return max(len(c) for c in self.phi)

    def owner(self, x: int) -> int:
        return self.tree.label[x]

    def lift(self, vertices: Iterable[int]) -> frozenset:
        out: set = set()
        for v in vertices:
            out.update(self.phi[v])
        return frozenset(out)

    def projections(self, F: Iterable[int]) -> list[frozenset]:
        """Per-constituent projections of F, in global node ids."""
        F = self.graph.check_edge_set(F)
        if not F:
            return [frozenset() for _ in self.constituents]
        comps = _component_nodes(self.graph, F)
        out = []
        for part, nm in zip(self.constituents, self.node_maps):
            out.append(frozenset(nm[c] for c in _project(part, comps)))
        return out

    def constituent_projection(self, j: int, F: Iterable[int]) -> frozenset:
        local = project_to_tree(self.constituents[j], F)
        nm = self.node_maps[j]
        return frozenset(nm[c] for c in local)

    def forward(self, F: Iterable[int], projections: list | None = None) -> frozenset:
        projs = self.projections(F) if projections is None else projections
        if self.construction == MERGED_PARTIAL:
            return frozenset().union(*projs)
        best = None
        for proj in projs:
            cost = self.tree.edge_weight(proj)
            if best is None or cost < best[0] - TOL:
                best = (cost, proj)
        return best[1]

    def backward(self, Fp: Iterable[int]) -> frozenset:
        return _backward(self.metric, self.tree, Fp)

    def to_json(self) -> dict:
        t = self.tree
        return {
            "construction": self.construction,
            "root": t.root,
            "nodes": t.n,
            "edges": [[c, t.parent[c], t.weight[c]] for c in t.edges],
            "owner": list(t.label),
            "phi": {str(v): list(c) for v, c in enumerate(self.phi)},
            "provenance": list(self.provenance),
            "chi": self.chi,
        }


def _merge(parts: Sequence[PartialTreeEmbedding], r: int, n: int):
    parent = [-1]
    weight = [0.0]
    label = [r]
    prov = [-1]
    maps = []
    for j, part in enumerate(parts):
        t = part.tree
        nm = [0] * t.n
        for x in t.order:
            if x == t.root:
                nm[x] = 0
                continue
            nm[x] = len(parent)
            parent.append(nm[t.parent[x]])
            weight.append(t.weight[x])
            label.append(t.label[x])
            prov.append(j)
        maps.append(tuple(nm))
    tree = RootedTree(tuple(parent), tuple(weight), tuple(label))
    phi = [[] for _ in range(n)]
    for x, v in enumerate(label):
        phi[v].append(x)
    return tree, tuple(tuple(c) for c in phi), tuple(prov), tuple(maps)


def _rooted(g: WeightedGraph, r: int | None) -> int:
    r = g.root if r is None else r
    if r is None:
        raise GraphError("a root vertex is required")
    if not 0 <= r < g.n:
        raise GraphError(f"root {r} out of range")
    return r


def build_construction1(
    g: WeightedGraph,
    r: int | None = None,
    epsilon: float = 0.25,
    tau: int | None = None,
    alpha: float | None = None,
) -> CopyTreeEmbedding:
    r = _rooted(g, r)
    m = shortest_path_metric(g)
    if alpha is None:
        alpha = calibrate_alpha(m, uniform(m.n))
    retries = 0
    while True:
        try:
            fam = padded_family(m, epsilon, alpha, tau)
            break
        except GoodStartError:
            alpha /= 2
            retries += 1
    parts = []
    seen = set()
    kept = 0
    for hd, flags in zip(fam.decompositions, fam.padded):
        if not flags[r]:
            continue
        kept += 1
        part = partial_tree_from(m, hd, r, alpha)
        sig = part.signature()
        if sig in seen:
            continue
        seen.add(sig)
        parts.append(part)
    if not parts:
        raise EmbeddingError("root was never padded")
    tree, phi, prov, maps = _merge(parts, r, g.n)
    missing = [v for v in range(g.n) if not phi[v]]
    if missing:
        raise EmbeddingError(f"vertices {missing[:5]} share no decomposition with the root")
    meta = {
        "alpha": alpha,
        "epsilon": epsilon,
        "tau": fam.tau,
        "alpha_halvings": retries,
        "kept_decompositions": kept,
        "distinct_trees": len(parts),
        "padded_counts": fam.counts.tolist(),
        "max_stretch": max(p.gamma for p in parts),
    }
    return CopyTreeEmbedding(
        g, m, r, tree, phi, MERGED_PARTIAL, prov, tuple(parts), maps, len(parts) * 64.0 / alpha, meta
    )


def _sample_frt(m: Metric, r: int, k: int, seed: int) -> list[PartialTreeEmbedding]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(k):
        pi = rng.permutation(m.n)
        beta = float(rng.uniform(0.5, 1.0))
        out.append(frt_tree_from(m, decomposition_from(m, CuttingDraw(tuple(pi), beta)), r))
    return out


def build_construction2(g: WeightedGraph, r: int | None = None, k: int | None = None, seed: int = 0) -> CopyTreeEmbedding:
    r = _rooted(g, r)
    m = shortest_path_metric(g)
    if k is None:
        k = max(1, math.ceil(g.n * math.log2(max(g.n, 2))))
    if k < 1:
        raise ValueError("k must be at least 1")
    parts = _sample_frt(m, r, k, seed)
    tree, phi, prov, maps = _merge(parts, r, g.n)
    return CopyTreeEmbedding(g, m, r, tree, phi, FRT_SUPPORT, prov, tuple(parts), maps, None, {"k": k, "seed": seed})


def demand_robust_k(n: int, m: int) -> int:
    return math.ceil(4 * math.log(4 * n * (m + 1)) - 1e-12)


@dataclass(frozen=True, eq=False)
class DemandRobustEmbedding(CopyTreeEmbedding):
    scenarios: int = 1

    def forward_tuple(self, X: Sequence[Iterable[int]]) -> tuple:
        return forward_map_tuple(self, X)


def phi_is_partition(e: CopyTreeEmbedding) -> bool:
    seen: set = set()
    for v, copies in enumerate(e.phi):
        if not copies or seen & set(copies) or any(e.tree.label[x] != v for x in copies):
            return False
        seen |= set(copies)
    return seen == set(range(e.tree.n))


def structural_problems(e: CopyTreeEmbedding) -> list[str]:
    out = []
    if not is_well_separated(e.tree):
        out.append("tree is not well-separated")
    if tuple(e.phi[e.root]) != (e.tree.root,):
        out.append("phi(root) is not the tree root alone")
    if not phi_is_partition(e):
        out.append("phi is not a partition of the tree nodes into nonempty images")
    return out


def build_demand_robust(
    g: WeightedGraph, r: int | None = None, m: int = 1, seed: int = 0, retries: int = 10
) -> DemandRobustEmbedding:
    if m < 1:
        raise ValueError("scenario count must be at least 1")
    r = _rooted(g, r)
    metric = shortest_path_metric(g)
    k = demand_robust_k(g.n, m)
    for attempt in range(retries + 1):
        s = seed + attempt
        parts = _sample_frt(metric, r, k, s)
        tree, phi, prov, maps = _merge(parts, r, g.n)
        emb = DemandRobustEmbedding(
            g, metric, r, tree, phi, DEMAND_ROBUST, prov, tuple(parts), maps, None,
            {"k": k, "seed": s, "attempts": attempt + 1}, m,
        )
        if not structural_problems(emb):
            return emb
    raise EmbeddingError("demand-robust embedding failed verification after retries")


def forward_map_tuple(e: CopyTreeEmbedding, X: Sequence[Iterable[int]]) -> tuple:
    X = [e.graph.check_edge_set(x) for x in X]
    if isinstance(e, DemandRobustEmbedding) and len(X) != e.scenarios + 1:
        raise ValueError(f"expected {e.scenarios + 1} edge sets, got {len(X)}")
    if not X:
        raise ValueError("tuple must contain the first-stage set")
    first = e.projections(X[0])
    first_cost = [e.tree.edge_weight(s) for s in first]
    out = [frozenset().union(*first)]
    for Xi in X[1:]:
        best = None
        for j, proj in enumerate(e.projections(Xi)):
            cost = first_cost[j] + e.tree.edge_weight(proj)
            if best is None or cost < best[0] - TOL:
                best = (cost, proj)
        out.append(best[1])
    return tuple(out)


@dataclass
class EmbeddingReport:
    construction: str
    chi: int
    nodes: int
    well_separated: bool
    phi_partition: bool
    root_singleton: bool
    trials: int
    forward_connectivity: bool = True
    backward_connectivity: bool = True
    root_copies_property: bool | None = None
    backward_cost: bool = True
    backward_monotone: bool = True
    forward_monotone: bool | None = None
    alpha_fwd: float = 0.0
    alpha_fwd_per_tree: float = 0.0
    backward_slack: float = 0.0
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        checks = [
            self.well_separated, self.phi_partition, self.root_singleton,
            self.forward_connectivity, self.backward_connectivity, self.backward_cost,
            self.backward_monotone,
        ]
        checks += [x for x in (self.root_copies_property, self.forward_monotone) if x is not None]
        return all(checks)

    def to_json(self) -> dict:
        data = dict(self.__dict__)
        data["ok"] = self.ok
        return data


def _random_subset(rng: np.random.Generator, items: Sequence[int]) -> frozenset:
    if not items:
        return frozenset()
    q = rng.uniform(0.05, 0.95)
    keep = rng.random(len(items)) < q
    return frozenset(int(x) for x, k in zip(items, keep) if k)


def check_forward(e: CopyTreeEmbedding, F: frozenset, Fp: frozenset) -> tuple[bool, bool]:
    """Connectivity preserved by Fp = forward(F); second flag is the root-copies property."""
    g, t = e.graph, e.tree
    glab = g.component_labels(F)
    tlab = t.component_labels(Fp)
    comps = [{tlab[x] for x in e.phi[v]} for v in range(g.n)]
    ok = True
    for u, v in combinations(range(g.n), 2):
        if glab[u] == glab[v] and not comps[u] & comps[v]:
            ok = False
            break
    root_lab = tlab[t.root]
    strong = all(
        all(tlab[x] == root_lab for x in e.phi[v]) for v in range(g.n) if glab[v] == glab[e.root]
    )
    return ok, strong


def check_backward(e: CopyTreeEmbedding, Fp: frozenset, F: frozenset) -> bool:
    glab = e.graph.component_labels(F)
    tlab = e.tree.component_labels(Fp)
    seen: dict = {}
    for x in range(e.tree.n):
        owner_comp = glab[e.tree.label[x]]
        if seen.setdefault(tlab[x], owner_comp) != owner_comp:
            return False
    return True


def verify_embedding(e: CopyTreeEmbedding, g: WeightedGraph | None = None, trials: int = 100, seed: int = 0) -> EmbeddingReport:
    g = e.graph if g is None else g
    if g is not e.graph and (g.n != e.graph.n or g.edges != e.graph.edges):
        raise ValueError("embedding was built for a different graph")
    problems = structural_problems(e)
    rep = EmbeddingReport(
        construction=e.construction,
        chi=e.chi,
        nodes=e.tree.n,
        well_separated=is_well_separated(e.tree),
        phi_partition=phi_is_partition(e),
        root_singleton=tuple(e.phi[e.root]) == (e.tree.root,),
        trials=trials,
        problems=problems,
    )
    merged = e.construction == MERGED_PARTIAL
    if merged:
        rep.root_copies_property = True
        rep.forward_monotone = True
    rng = np.random.default_rng(seed)
    edges = list(range(g.m))
    tree_edges = list(e.tree.edges)
    for _ in range(trials):
        F = _random_subset(rng, edges)
        projs = e.projections(F)
        Fp = e.forward(F, projs)
        ok, strong = check_forward(e, F, Fp)
        rep.forward_connectivity &= ok
        if merged:
            rep.root_copies_property &= strong
            sub = _random_subset(rng, sorted(F))
            rep.forward_monotone &= e.forward(sub) <= Fp
        wF = g.weight(F)
        if wF > 0:
            rep.alpha_fwd = max(rep.alpha_fwd, e.tree.edge_weight(Fp) / wF)
            per_tree = max(e.tree.edge_weight(s) for s in projs)
            rep.alpha_fwd_per_tree = max(rep.alpha_fwd_per_tree, per_tree / wF)
        big = _random_subset(rng, tree_edges)
        small = _random_subset(rng, sorted(big))
        back_big, back_small = e.backward(big), e.backward(small)
        rep.backward_connectivity &= check_backward(e, big, back_big)
        rep.backward_monotone &= back_small <= back_big
        w_tree = e.tree.edge_weight(big)
        w_graph = g.weight(back_big)
        rep.backward_cost &= w_graph <= w_tree + TOL
        if w_tree > 0:
            rep.backward_slack = max(rep.backward_slack, w_graph / w_tree)
    return rep
