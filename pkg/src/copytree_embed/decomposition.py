"""FRT cutting scheme, padding checks and the derandomized padded family."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import TOL, Metric, RootedTree

GOOD_START = 0.95


class GoodStartError(ValueError):
    """The estimator starts below the required level; recalibrate alpha."""


def num_levels(m: Metric) -> int:
    """Top level h. The top radius 2^(h-1)*beta must reach the diameter."""
    if m.n == 1 or m.diameter <= 0:
        return 0
    h = 2
    while 2.0 ** h < 4 * m.diameter - TOL:
        h += 1
    return h


@dataclass(frozen=True)
class CuttingDraw:
    pi: tuple
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "pi", tuple(int(x) for x in self.pi))
        if sorted(self.pi) != list(range(len(self.pi))):
            raise ValueError("pi must be a permutation of the vertex ids")
        if not 0.5 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0.5, 1), got {self.beta}")


@dataclass(frozen=True, eq=False)
class HierarchicalDecomposition:
    """Partitions P_0..P_h stored as per-level part labels.

    ``labels[i][v]`` is the index of v's part at level i. Parts are numbered
    in order of their smallest member.
    """

    labels: tuple
    draw: CuttingDraw | None = None

    @property
    def h(self) -> int:
        return len(self.labels) - 1

    @property
    def n(self) -> int:
        return len(self.labels[0])

    def parts(self, i: int) -> list[tuple]:
        out: dict[int, list[int]] = {}
        for v, lab in enumerate(self.labels[i]):
            out.setdefault(lab, []).append(v)
        return [tuple(out[k]) for k in sorted(out)]

    def to_json(self) -> dict:
        data = {"h": self.h, "levels": [[list(p) for p in self.parts(i)] for i in range(self.h + 1)]}
        if self.draw is not None:
            data["pi"] = list(self.draw.pi)
            data["beta"] = self.draw.beta
        return data


def _canonical(keys) -> tuple:
    seen: dict = {}
    return tuple(seen.setdefault(k, len(seen)) for k in keys)


def decomposition_from(m: Metric, draw: CuttingDraw) -> HierarchicalDecomposition:
    n = m.n
    if len(draw.pi) != n:
        raise ValueError("permutation size does not match metric")
    h = num_levels(m)
    pi = np.asarray(draw.pi)
    pos = np.empty(n, dtype=np.int64)
    pos[pi] = np.arange(n)
    levels = [None] * (h + 1)
    levels[h] = (0,) * n
    for i in range(h - 1, -1, -1):
        radius = 2.0 ** (i - 1) * draw.beta
        keyed = np.where(m.d <= radius + TOL, pos[:, None], n)
        center = pi[keyed.min(axis=0)]
        parent = levels[i + 1]
        levels[i] = _canonical(zip(parent, center.tolist()))
    return HierarchicalDecomposition(tuple(levels), draw)


def validate_decomposition(m: Metric, hd: HierarchicalDecomposition) -> list[str]:
    """Return a list of violated invariants (empty when valid)."""
    problems = []
    h = hd.h
    if len(set(hd.labels[h])) != 1:
        problems.append("top level is not a single part")
    if len(set(hd.labels[0])) != hd.n:
        problems.append("level 0 is not all singletons")
    for i in range(h + 1):
        lab = np.asarray(hd.labels[i])
        same = lab[:, None] == lab[None, :]
        if np.any(m.d[same] > 2.0 ** i + TOL):
            problems.append(f"level {i} has a part of diameter above {2 ** i}")
        if i < h:
            up = np.asarray(hd.labels[i + 1])
            if np.any(same & (up[:, None] != up[None, :])):
                problems.append(f"level {i} does not refine level {i + 1}")
    return problems


def padded_mask(m: Metric, hd: HierarchicalDecomposition, alpha: float) -> np.ndarray:
    """Boolean vector: v is alpha-padded in hd."""
    n = m.n
    ok = np.ones(n, dtype=bool)
    for i in range(hd.h + 1):
        lab = np.asarray(hd.labels[i])
        inside = m.d <= alpha * 2.0 ** i + TOL
        differ = lab[None, :] != lab[:, None]
        ok &= ~np.any(inside & differ, axis=1)
    return ok


def is_alpha_padded(m: Metric, hd: HierarchicalDecomposition, v: int, alpha: float) -> bool:
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    return bool(padded_mask(m, hd, alpha)[v])


def _hst(hd: HierarchicalDecomposition):
    """Parent, edge weight and level arrays of the decomposition tree.

    Nodes 0..n-1 are the level-0 singletons; the edge from a level-i part to
    its parent weighs 2^(i+1).
    """
    n, h = hd.n, hd.h
    node_of = {(0, v): v for v in range(n)}
    level = [0] * n
    for i in range(1, h + 1):
        for part in sorted(set(hd.labels[i])):
            node_of[(i, part)] = len(level)
            level.append(i)
    parent = [-1] * len(level)
    weight = [0.0] * len(level)
    for i in range(h):
        for v in range(n):
            child = node_of[(i, hd.labels[i][v])]
            parent[child] = node_of[(i + 1, hd.labels[i + 1][v])]
            weight[child] = 2.0 ** (i + 1)
    return parent, weight, level


def tree_of(hd: HierarchicalDecomposition) -> RootedTree:
    parent, weight, _ = _hst(hd)
    label = list(range(hd.n)) + [-1] * (len(parent) - hd.n)
    return RootedTree(tuple(parent), tuple(weight), tuple(label))


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha <= 0.125 + 1e-15:
        raise ValueError(f"alpha must lie in (0, 1/8], got {alpha}")


def candidate_cutters(m: Metric, v: int, i: int, alpha: float) -> frozenset:
    _check_alpha(alpha)
    lo = 2.0 ** (i - 2) - 2.0 ** i * alpha
    hi = 2.0 ** (i - 1) + 2.0 ** i * alpha
    d = m.d[v]
    hit = (d >= lo - TOL) & (d <= hi + TOL)
    hit[v] = False
    return frozenset(int(u) for u in np.nonzero(hit)[0])


def uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def _check_distribution(p, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (n,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("p must be a probability vector over the vertices")
    return p


class PaddingEstimator:
    """Pessimistic estimator of the weighted padded fraction.

    Precomputes every (v, u, i) with u a candidate cutter of B(v, alpha 2^i),
    the open beta-window in which u threatens that ball, and the set
    N_v(u) of vertices at least as close to v as u.
    """

    def __init__(self, m: Metric, alpha: float):
        _check_alpha(alpha)
        self.m = m
        self.alpha = alpha
        self.h = num_levels(m)
        n = m.n
        tv, tu, ti = [], [], []
        for i in range(self.h + 1):
            lo = 2.0 ** (i - 2) - 2.0 ** i * alpha
            hi = 2.0 ** (i - 1) + 2.0 ** i * alpha
            hit = (m.d >= lo - TOL) & (m.d <= hi + TOL)
            np.fill_diagonal(hit, False)
            vs, us = np.nonzero(hit)
            tv.extend(vs.tolist())
            tu.extend(us.tolist())
            ti.extend([i] * len(vs))
        self.tv = np.asarray(tv, dtype=np.int64)
        self.tu = np.asarray(tu, dtype=np.int64)
        self.ti = np.asarray(ti, dtype=np.int64)
        dist = m.d[self.tv, self.tu]
        center = dist * 2.0 ** (1 - self.ti)
        self.lo = center - 2 * alpha
        self.hi = center + 2 * alpha
        self.near = m.d[:, self.tv].T <= dist[:, None] + TOL if len(tv) else np.zeros((0, n), bool)
        self.size = self.near.sum(axis=1).astype(float)

    @property
    def n(self) -> int:
        return self.m.n

    def threatened(self, beta: float) -> np.ndarray:
        return (self.lo < beta) & (beta < self.hi)

    def thresholds(self) -> list[float]:
        vals = np.concatenate([self.lo, self.hi])
        vals = np.sort(vals[(vals > 0.5) & (vals < 1.0)])
        out = []
        for x in vals:
            if not out or x - out[-1] > 1e-12:
                out.append(float(x))
        return out

    def representatives(self) -> list[float]:
        cuts = [0.5] + self.thresholds() + [1.0]
        reps = []
        for a, b in zip(cuts, cuts[1:]):
            if b - a > 1e-12:
                reps.append((a + b) / 2)
        return reps

    def value(self, p, prefix=(), beta: float = 0.75) -> float:
        if not 0.5 <= beta < 1.0:
            raise ValueError(f"beta must lie in [0.5, 1), got {beta}")
        p = np.asarray(p, dtype=float)
        prefix = list(prefix)
        if len(set(prefix)) != len(prefix):
            raise ValueError("prefix repeats a vertex")
        pos = np.full(self.n, np.inf)
        pos[prefix] = np.arange(len(prefix))
        first = np.where(self.near, pos[None, :], np.inf).min(axis=1) if len(self.tv) else pos[:0]
        prob = np.where(
            np.isinf(first), 1.0 / np.maximum(self.size, 1), (pos[self.tu] == first).astype(float)
        )
        thr = self.threatened(beta)
        return float(1.0 - np.sum(p[self.tv] * prob * thr))

    def start_values(self, p) -> tuple[list[float], list[float]]:
        p = np.asarray(p, dtype=float)
        reps = self.representatives()
        base = p[self.tv] / np.maximum(self.size, 1)
        vals = [float(1.0 - base[self.threatened(b)].sum()) for b in reps]
        return reps, vals

    def greedy(self, p, beta: float, record: bool = False):
        """Fix the permutation one vertex at a time, never lowering the estimate.

        Returns (pi, values) where values[k] is the estimate after k vertices.
        """
        p = np.asarray(p, dtype=float)
        n = self.n
        idx = np.nonzero(self.threatened(beta))[0]
        near = self.near[idx].astype(float)
        u = self.tu[idx]
        size = self.size[idx]
        unit = p[self.tv[idx]] / size
        live = np.ones(len(idx))
        value = 1.0 - unit.sum()
        values = [value]
        remaining = np.ones(n, dtype=bool)
        pi = []
        for _ in range(n):
            a = unit * live
            gain = a @ near - np.bincount(u, weights=a * size, minlength=n)
            gain = np.where(remaining, gain, -np.inf)
            best = gain.max()
            x = int(np.nonzero(gain >= best - 1e-12)[0][0])
            pi.append(x)
            remaining[x] = False
            value += float(gain[x])
            live = live * (near[:, x] == 0)
            values.append(value)
        return tuple(pi), values


def pessimistic_estimate(m: Metric, p, prefix, beta: float, alpha: float) -> float:
    return PaddingEstimator(m, alpha).value(_check_distribution(p, m.n), prefix, beta)


def beta_thresholds(m: Metric, alpha: float) -> list[float]:
    """One representative beta per interval of constant estimate."""
    return PaddingEstimator(m, alpha).representatives()


def calibrate_alpha(m: Metric, p=None) -> float:
    p = uniform(m.n) if p is None else _check_distribution(p, m.n)
    alpha = 0.125
    while alpha > 2.0 ** -60:
        _, vals = PaddingEstimator(m, alpha).start_values(p)
        if max(vals) >= GOOD_START - 1e-12:
            return alpha
        alpha /= 2
    raise RuntimeError("alpha calibration did not converge")


def derandomized_decomposition(
    m: Metric, p, alpha: float, estimator: PaddingEstimator | None = None
) -> HierarchicalDecomposition:
    p = _check_distribution(p, m.n)
    est = estimator if estimator is not None else PaddingEstimator(m, alpha)
    if est.alpha != alpha:
        raise ValueError("estimator built for a different alpha")
    reps, vals = est.start_values(p)
    best = int(np.argmax(vals))
    if vals[best] < GOOD_START - 1e-12:
        raise GoodStartError(
            f"estimate {vals[best]:.4f} < {GOOD_START} at alpha={alpha}; recalibrate alpha"
        )
    beta = reps[best]
    pi, _ = est.greedy(p, beta)
    return decomposition_from(m, CuttingDraw(pi, beta))


@dataclass(frozen=True, eq=False)
class PaddedFamily:
    decompositions: tuple
    alpha: float
    epsilon: float
    tau: int
    padded: np.ndarray  # (tau, n) booleans
    weights: np.ndarray  # MW weights before each round, normalized to max 1
    distributions: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def counts(self) -> np.ndarray:
        return self.padded.sum(axis=0)


def default_tau(n: int, epsilon: float) -> int:
    if n <= 1:
        return 1
    return max(1, math.ceil(4 * math.log(n) / epsilon**2 - 1e-9))


def padded_family(m: Metric, epsilon: float, alpha: float, tau: int | None = None) -> PaddedFamily:
    if not 0 < epsilon <= 0.25:
        raise ValueError(f"epsilon must lie in (0, 0.25], got {epsilon}")
    n = m.n
    tau = default_tau(n, epsilon) if tau is None else int(tau)
    if tau < 1:
        raise ValueError("tau must be positive")
    est = PaddingEstimator(m, alpha)
    w = np.ones(n)
    floor = 1.0 / n**3
    decomps, flags, weights, dists = [], [], [], []
    for _ in range(tau):
        p = w / w.sum()
        p = np.maximum(p, floor)
        p /= p.sum()
        hd = derandomized_decomposition(m, p, alpha, est)
        mask = padded_mask(m, hd, alpha)
        decomps.append(hd)
        flags.append(mask)
        weights.append(w.copy())
        dists.append(p)
        w = w * np.exp(-epsilon * mask)
        w /= w.max()
    return PaddedFamily(
        tuple(decomps), alpha, epsilon, tau, np.array(flags), np.array(weights), np.array(dists)
    )
