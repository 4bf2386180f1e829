"""Seeded random instances for tests and benchmarks."""

from __future__ import annotations

import random

from .graph import WeightedGraph


def random_connected_graph(rng: random.Random, n: int, extra: int | None = None, wmax: int = 8) -> WeightedGraph:
    """Random spanning tree plus ``extra`` chords, integer weights in 1..wmax, root 0."""
    extra = n // 2 if extra is None else extra
    edges = [(i, rng.randrange(i), rng.randint(1, wmax)) for i in range(1, n)]
    used = {(min(u, v), max(u, v)) for u, v, _ in edges}
    room = n * (n - 1) // 2 - len(used)
    extra = min(extra, room)
    while extra > 0:
        u, v = rng.sample(range(n), 2)
        key = (min(u, v), max(u, v))
        if key in used:
            continue
        used.add(key)
        edges.append((u, v, rng.randint(1, wmax)))
        extra -= 1
    return WeightedGraph(n, tuple(edges), 0)


def random_tree(rng: random.Random, n: int, wmax: int = 8, max_depth: int | None = None) -> WeightedGraph:
    """Random tree rooted at 0; each vertex attaches to an earlier one within max_depth."""
    depth = [0]
    edges = []
    for v in range(1, n):
        choices = [u for u in range(v) if max_depth is None or depth[u] < max_depth]
        u = rng.choice(choices)
        depth.append(depth[u] + 1)
        edges.append((u, v, rng.randint(1, wmax)))
    return WeightedGraph(n, tuple(edges), 0)


def random_groups(rng: random.Random, n: int, k: int, size: int = 3, exclude=(0,)) -> list[list[int]]:
    pool = [v for v in range(n) if v not in set(exclude)]
    return [sorted(rng.sample(pool, rng.randint(1, min(size, len(pool))))) for _ in range(k)]
