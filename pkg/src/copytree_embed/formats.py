"""JSON file formats: graphs, event streams, scenario lists."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .graph import DisjointSet, GraphError, WeightedGraph
from .robust import GSF, GST, RobustInstance, Scenario


class InputError(ValueError):
    """Malformed input; the message names the file and the offending field."""


@dataclass(frozen=True)
class LoadedGraph:
    graph: WeightedGraph
    scale: float  # costs in file units = internal cost / scale
    vertex_map: tuple  # file vertex -> internal vertex
    edge_origin: tuple  # internal edge -> file edge index
    original_n: int
    contracted: int  # number of zero-weight edges contracted

    def to_file_edges(self, F) -> list[int]:
        return sorted(self.edge_origin[e] for e in F)

    def file_cost(self, cost: float) -> float:
        return cost / self.scale

    def vertex(self, v, where: str) -> int:
        if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < self.original_n:
            raise InputError(f"{where}: vertex {v!r} is not an id in [0, {self.original_n})")
        return self.vertex_map[v]


def read_json(path, what: str = "input"):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read {what} file ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from None


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise InputError(f"{where}: expected an integer, got {x!r}")
    return x


def graph_from_json(data, source: str = "graph", need_root: bool = False) -> LoadedGraph:
    if not isinstance(data, dict):
        raise InputError(f"{source}: expected an object with n, root, edges")
    n = _int(data.get("n"), f"{source}: n")
    if n < 1:
        raise InputError(f"{source}: n must be positive")
    root = data.get("root")
    if root is None and need_root:
        raise InputError(f"{source}: root is required")
    if root is not None:
        root = _int(root, f"{source}: root")
        if not 0 <= root < n:
            raise InputError(f"{source}: root {root} out of range [0, {n})")
    edges = data.get("edges")
    if not isinstance(edges, list):
        raise InputError(f"{source}: edges must be a list")
    raw = []
    for i, e in enumerate(edges):
        where = f"{source}: edges[{i}]"
        if not isinstance(e, list) or len(e) != 3:
            raise InputError(f"{where}: expected [u, v, w]")
        u, v = _int(e[0], f"{where}[0]"), _int(e[1], f"{where}[1]")
        w = _number(e[2], f"{where}[2]")
        if not (0 <= u < n and 0 <= v < n):
            raise InputError(f"{where}: vertex out of range [0, {n})")
        if u == v:
            raise InputError(f"{where}: self-loop")
        if w < 0 or w != w or w == float("inf"):
            raise InputError(f"{where}: weight must be finite and nonnegative")
        raw.append((u, v, w))
    dsu = DisjointSet(n)
    for u, v, w in raw:
        if w == 0:
            dsu.union(u, v)
    rep = [dsu.find(v) for v in range(n)]
    new_id: dict = {}
    vmap = tuple(new_id.setdefault(r, len(new_id)) for r in rep)
    kept, origin = [], []
    for i, (u, v, w) in enumerate(raw):
        if w == 0 or vmap[u] == vmap[v]:
            continue
        kept.append((vmap[u], vmap[v], w))
        origin.append(i)
    scale = 1.0
    if kept:
        low = min(w for _, _, w in kept)
        if low < 1:
            scale = 1.0 / low
            kept = [(u, v, w * scale) for u, v, w in kept]
    try:
        g = WeightedGraph(len(new_id), tuple(kept), None if root is None else vmap[root])
    except GraphError as exc:
        raise InputError(f"{source}: {exc}") from None
    if not g.is_connected():
        raise InputError(f"{source}: graph must be connected")
    return LoadedGraph(g, scale, vmap, tuple(origin), n, sum(1 for _, _, w in raw if w == 0))


def load_graph(path, need_root: bool = False) -> LoadedGraph:
    return graph_from_json(read_json(path, "graph"), str(path), need_root)


def _vertex_list(lg: LoadedGraph, x, where: str) -> list[int]:
    if not isinstance(x, list) or not x:
        raise InputError(f"{where}: expected a nonempty list of vertices")
    return sorted({lg.vertex(v, f"{where}[{i}]") for i, v in enumerate(x)})


def stream_from_json(data, lg: LoadedGraph, source: str = "stream") -> list[dict]:
    events = data.get("events") if isinstance(data, dict) else data
    if not isinstance(events, list):
        raise InputError(f"{source}: expected a list of events")
    out = []
    for t, ev in enumerate(events):
        where = f"{source}: event {t}"
        if not isinstance(ev, dict):
            raise InputError(f"{where}: expected an object")
        if "group" in ev:
            group = _vertex_list(lg, ev["group"], f"{where}.group")
            f = _int(ev.get("f", 1), f"{where}.f")
            out.append({"group": group, "f": f})
        elif "pair" in ev:
            pair = ev["pair"]
            if not isinstance(pair, list) or len(pair) != 2:
                raise InputError(f"{where}.pair: expected [[a...], [b...]]")
            out.append(
                {
                    "pair": (
                        _vertex_list(lg, pair[0], f"{where}.pair[0]"),
                        _vertex_list(lg, pair[1], f"{where}.pair[1]"),
                    )
                }
            )
        else:
            raise InputError(f"{where}: needs a 'group' or 'pair' key")
    return out


def load_stream(path, lg: LoadedGraph) -> list[dict]:
    return stream_from_json(read_json(path, "stream"), lg, str(path))


def scenarios_from_json(data, lg: LoadedGraph, source: str = "scenarios", kind: str | None = None) -> RobustInstance:
    items = data.get("scenarios") if isinstance(data, dict) else None
    if not isinstance(items, list):
        raise InputError(f"{source}: expected an object with a 'scenarios' list")
    out = []
    kinds = set()
    for i, sc in enumerate(items):
        where = f"{source}: scenarios[{i}]"
        if not isinstance(sc, dict):
            raise InputError(f"{where}: expected an object")
        sigma = _number(sc.get("sigma"), f"{where}.sigma")
        if sigma < 1:
            raise InputError(f"{where}.sigma: inflation factor must be at least 1")
        if "groups" in sc:
            if not isinstance(sc["groups"], list):
                raise InputError(f"{where}.groups: expected a list")
            groups = [_vertex_list(lg, g, f"{where}.groups[{j}]") for j, g in enumerate(sc["groups"])]
            out.append(Scenario(sigma, groups=groups))
            kinds.add(GST)
        elif "pairs" in sc:
            if not isinstance(sc["pairs"], list):
                raise InputError(f"{where}.pairs: expected a list")
            pairs = []
            for j, pr in enumerate(sc["pairs"]):
                if not isinstance(pr, list) or len(pr) != 2:
                    raise InputError(f"{where}.pairs[{j}]: expected [[a...], [b...]]")
                pairs.append(
                    (_vertex_list(lg, pr[0], f"{where}.pairs[{j}][0]"), _vertex_list(lg, pr[1], f"{where}.pairs[{j}][1]"))
                )
            out.append(Scenario(sigma, pairs=pairs))
            kinds.add(GSF)
        else:
            raise InputError(f"{where}: needs 'groups' or 'pairs'")
    if len(kinds) > 1:
        raise InputError(f"{source}: scenarios mix groups and pairs")
    found = kinds.pop() if kinds else (kind or GST)
    if kind is not None and found != kind:
        raise InputError(f"{source}: expected {kind} scenarios, found {found}")
    return RobustInstance(tuple(out), found)


def load_scenarios(path, lg: LoadedGraph, kind: str | None = None) -> RobustInstance:
    return scenarios_from_json(read_json(path, "scenarios"), lg, str(path), kind)
