"""Brute-force optima used as ground truth at desk scale."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .graph import TOL, Metric, RootedTree, WeightedGraph

GENERAL_BUDGET = 18
TREE_BUDGET = 20
ROBUST_GENERAL_BUDGET = 12
ROBUST_TREE_BUDGET = 16
MAX_SCENARIOS = 3


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    cost: float
    edges: frozenset


def _is_tree(g: WeightedGraph) -> bool:
    return g.m == g.n - 1 and g.is_connected()


def _check_budget(g: WeightedGraph, budget: int) -> None:
    if g.m > budget:
        raise BudgetExceeded(f"{g.m} edges exceed the enumeration budget of {budget}")


def label_table(g: WeightedGraph) -> np.ndarray:
    """Component labels of (V, mask) for every edge mask; row = mask."""
    E = g.m
    dtype = np.int16 if g.n < 2**15 else np.int32
    L = np.empty((1 << E, g.n), dtype=dtype)
    L[0] = np.arange(g.n)
    for b, (u, v, _) in enumerate(g.edges):
        half = 1 << b
        prev = L[:half]
        L[half : 2 * half] = np.where(prev == prev[:, u : u + 1], prev[:, v : v + 1], prev)
    return L


def cost_table(g: WeightedGraph) -> np.ndarray:
    cost = np.zeros(1 << g.m)
    for b, (_, _, w) in enumerate(g.edges):
        half = 1 << b
        cost[half : 2 * half] = cost[:half] + w
    return cost


def mask_edges(mask: int) -> frozenset:
    out, b = [], 0
    while mask:
        if mask & 1:
            out.append(b)
        mask >>= 1
        b += 1
    return frozenset(out)


def _gst_feasible(L: np.ndarray, r: int, groups) -> np.ndarray:
    ok = np.ones(L.shape[0], dtype=bool)
    root = L[:, r : r + 1]
    for grp in groups:
        ok &= (L[:, sorted(grp)] == root).any(axis=1)
    return ok


def _gsf_feasible(L: np.ndarray, pairs) -> np.ndarray:
    ok = np.ones(L.shape[0], dtype=bool)
    for A, B in pairs:
        hit = np.zeros(L.shape[0], dtype=bool)
        for a in A:
            hit |= (L[:, sorted(B)] == L[:, a : a + 1]).any(axis=1)
        ok &= hit
    return ok


def _best(cost: np.ndarray, feasible: np.ndarray) -> OracleResult:
    if not feasible.any():
        raise ValueError("no feasible edge set")
    masked = np.where(feasible, cost, np.inf)
    k = int(np.argmin(masked))
    return OracleResult(float(masked[k]), mask_edges(k))


def gst_tree_dp(tree: RootedTree, groups: Sequence) -> float:
    """Minimum rooted subtree touching every group (subset DP over groups)."""
    k = len(groups)
    full = (1 << k) - 1
    cover = [0] * tree.n
    for j, grp in enumerate(groups):
        for v in grp:
            cover[v] |= 1 << j
    INF = float("inf")
    dp = [None] * tree.n
    for v in reversed(tree.order):
        cur = [INF] * (full + 1)
        cur[cover[v]] = 0.0
        for c in tree.children[v]:
            child = dp[c]
            w = tree.weight[c]
            nxt = list(cur)
            for S, a in enumerate(cur):
                if a == INF:
                    continue
                for T, b in enumerate(child):
                    if b != INF and a + w + b < nxt[S | T]:
                        nxt[S | T] = a + w + b
            cur = nxt
            dp[c] = None
        dp[v] = cur
    return dp[tree.root][full]


def opt_group_steiner_tree(g: WeightedGraph, r: int, groups: Sequence, budget: int | None = None) -> OracleResult:
    groups = [frozenset(x) for x in groups]
    tree = _is_tree(g)
    _check_budget(g, budget or (TREE_BUDGET if tree else GENERAL_BUDGET))
    res = _best(cost_table(g), _gst_feasible(label_table(g), r, groups))
    if tree:
        rt, _ = RootedTree.from_graph(g, r)
        dp = gst_tree_dp(rt, groups)
        if abs(dp - res.cost) > 1e-7:
            raise AssertionError(f"tree DP {dp} disagrees with enumeration {res.cost}")
    return res


def opt_group_steiner_forest(g: WeightedGraph, pairs: Sequence, budget: int | None = None) -> OracleResult:
    pairs = [(frozenset(a), frozenset(b)) for a, b in pairs]
    _check_budget(g, budget or (TREE_BUDGET if _is_tree(g) else GENERAL_BUDGET))
    return _best(cost_table(g), _gsf_feasible(label_table(g), pairs))


def opt_two_level_partial(g: WeightedGraph, r: int, families: Sequence, f: Sequence[int],
                          budget: int | None = None) -> OracleResult:
    """Cheapest edge set whose root component touches at least f[i] groups of families[i].

    Meant for trees; on a general graph it runs under the smaller budget.
    """
    _check_budget(g, budget or (TREE_BUDGET if _is_tree(g) else GENERAL_BUDGET))
    L = label_table(g)
    conn = L == L[:, r : r + 1]
    ok = np.ones(L.shape[0], dtype=bool)
    for fam, need in zip(families, f):
        if not 1 <= need <= len(fam):
            raise ValueError(f"requirement {need} outside [1, {len(fam)}]")
        touched = sum(conn[:, sorted(grp)].any(axis=1).astype(int) for grp in fam)
        ok &= touched >= need
    return _best(cost_table(g), ok)


@dataclass(frozen=True)
class RobustOptimum:
    cost: float
    X0: frozenset
    X: tuple


def opt_robust(g: WeightedGraph, r: int | None, inst, budget: int | None = None,
               max_scenarios: int = MAX_SCENARIOS) -> RobustOptimum:
    """Enumerate first-stage sets; each scenario completes at minimum cost.

    best_i[X0] is the cheapest feasible superset of X0, found with a
    superset-minimum sweep over the mask lattice.
    """
    if inst.m > max_scenarios:
        raise BudgetExceeded(f"{inst.m} scenarios exceed the budget of {max_scenarios}")
    _check_budget(g, budget or (ROBUST_TREE_BUDGET if _is_tree(g) else ROBUST_GENERAL_BUDGET))
    if inst.m == 0:
        return RobustOptimum(0.0, frozenset(), ())
    r = g.root if r is None else r
    L = label_table(g)
    cost = cost_table(g)
    E = g.m
    size = 1 << E
    total = np.full(size, -np.inf)
    argbest = []
    for s in inst.scenarios:
        feas = _gst_feasible(L, r, s.groups) if s.groups else _gsf_feasible(L, s.pairs)
        best = np.where(feas, cost, np.inf)
        arg = np.arange(size)
        for b in range(E):
            bv = best.reshape(-1, 2, 1 << b)
            av = arg.reshape(-1, 2, 1 << b)
            better = bv[:, 1, :] < bv[:, 0, :]
            bv[:, 0, :] = np.where(better, bv[:, 1, :], bv[:, 0, :])
            av[:, 0, :] = np.where(better, av[:, 1, :], av[:, 0, :])
        total = np.maximum(total, cost + s.sigma * (best - cost))
        argbest.append(arg)
    k = int(np.argmin(total))
    X = tuple(mask_edges(int(a[k]) & ~k) for a in argbest)
    return RobustOptimum(float(total[k]), mask_edges(k), X)


def monte_carlo_padding(m: Metric, p, alpha: float, prefix=(), beta: float = 0.75,
                        samples: int = 10_000, seed: int = 0) -> tuple[float, float]:
    """Weighted padded fraction over uniformly random completions of a prefix.

    Returns (mean, standard error). Written independently of the
    decomposition module: it redoes the cutting and ball checks in bulk.
    """
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    n = m.n
    p = np.asarray(p, dtype=float)
    rng = np.random.default_rng(seed)
    prefix = list(prefix)
    rest = np.array([v for v in range(n) if v not in set(prefix)], dtype=np.int64)
    h = 0
    if n > 1:
        h = 2
        while 2.0**h < 4 * m.d.max() - TOL:
            h += 1
    perms = np.empty((samples, n), dtype=np.int64)
    perms[:, : len(prefix)] = prefix
    if len(rest):
        keys = rng.random((samples, len(rest)))
        perms[:, len(prefix) :] = rest[np.argsort(keys, axis=1)]
    rank = np.empty_like(perms)
    np.put_along_axis(rank, perms, np.arange(n)[None, :].repeat(samples, 0), axis=1)
    label = np.zeros((samples, n), dtype=np.int64)
    padded = np.ones((samples, n), dtype=bool)
    level_labels = {h: label}
    for i in range(h - 1, -1, -1):
        radius = 2.0 ** (i - 1) * beta
        within = m.d <= radius + TOL  # within[u, v]
        keyed = np.where(within[None, :, :], rank[:, :, None], n)
        first = keyed.min(axis=1)  # rank of the capturing vertex, per v
        label = label * (n + 1) + first
        _, inv = np.unique(label, return_inverse=True)
        label = inv.reshape(samples, n)
        level_labels[i] = label
    for i, lab in level_labels.items():
        ball = m.d <= alpha * 2.0**i + TOL
        same = lab[:, :, None] == lab[:, None, :]
        padded &= ~np.any(ball[None, :, :] & ~same, axis=2)
    vals = padded.astype(float) @ p
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples))


def lp_vertex_enumeration(lp) -> float:
    """Optimum of a tiny bounded LP by checking every basic solution."""
    n = lp.num_vars
    G, h = [], []
    for coeffs, sense, rhs, _ in lp.rows:
        row = np.zeros(n)
        for j, a in coeffs.items():
            row[j] = a
        if sense in ("<=", "=="):
            G.append(row), h.append(rhs)
        if sense in (">=", "=="):
            G.append(-row), h.append(-rhs)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lp.lb[j]):
            G.append(-e), h.append(-lp.lb[j])
        if np.isfinite(lp.ub[j]):
            G.append(e.copy()), h.append(lp.ub[j])
    G, h = np.array(G), np.array(h)
    c = np.array(lp.cost)
    best = np.inf
    for rows in combinations(range(len(h)), n):
        A = G[list(rows)]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        x = np.linalg.solve(A, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            best = min(best, float(c @ x))
    if best == np.inf:
        raise ValueError("no feasible vertex")
    return best
