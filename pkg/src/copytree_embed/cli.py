"""Command-line front end. Every command prints one JSON report."""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from decimal import Decimal
from fractions import Fraction

import numpy as np

from .embedding import (
    FRT_SUPPORT,
    MERGED_PARTIAL,
    EmbeddingError,
    build_construction1,
    build_construction2,
    verify_embedding,
)
from .formats import InputError, LoadedGraph, graph_from_json, load_graph, load_scenarios, load_stream, read_json, scenarios_from_json
from .generators import random_connected_graph
from .graph import GraphError, RootedTree, WeightedGraph
from .lp import LPInfeasible, LPUnbounded
from .online import (
    ContractViolation,
    groups_overlap,
    make_groups_disjoint,
    online_gsf_driver,
    online_gst_driver,
    partial_gst_general,
)
from .oracle import (
    BudgetExceeded,
    opt_group_steiner_forest,
    opt_group_steiner_tree,
    opt_robust,
    opt_two_level_partial,
)
from .robust import GSF, GST, RobustSolution, evaluate_robust, solve_robust_general, solve_robust_tree

SCHEMA = 1
EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def ratio(a: float, b: float) -> dict:
    """a/b as a float plus the exact fraction of the two decimal costs."""
    if b == 0:
        return {"value": 1.0 if a == 0 else None, "exact": "1/1" if a == 0 else None}
    q = Fraction(Decimal(repr(float(a)))) / Fraction(Decimal(repr(float(b))))
    return {"value": float(q), "exact": f"{q.numerator}/{q.denominator}"}


def _plain(x):
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _report(args, lg: LoadedGraph | None, params: dict, results) -> dict:
    rep = {"schema": SCHEMA, "command": args.command, "seed": args.seed, "parameters": params}
    if lg is not None:
        rep["normalization"] = {"scale": lg.scale, "contracted_zero_edges": lg.contracted}
    rep["results"] = results
    return rep


def _root(lg: LoadedGraph, required: bool = True) -> int:
    r = lg.graph.root
    if r is None:
        if required:
            raise InputError("graph file needs a root")
        return 0
    return r


def _alpha(value: str):
    if value == "auto":
        return None
    try:
        a = float(value)
    except ValueError:
        raise InputError(f"--alpha must be 'auto' or a number, got {value!r}") from None
    if not 0 < a <= 0.125:
        raise InputError("--alpha must lie in (0, 1/8]")
    return a


def _build(args, g: WeightedGraph, r: int):
    if args.construction == MERGED_PARTIAL:
        return build_construction1(g, r, args.epsilon, args.tau_override, _alpha(args.alpha))
    return build_construction2(g, r, args.k, args.seed)


def cmd_embed(args):
    lg = load_graph(args.graph, need_root=True)
    g, r = lg.graph, _root(lg)
    emb = _build(args, g, r)
    rep = verify_embedding(emb, g, args.trials, args.seed)
    meta = {k: v for k, v in emb.meta.items() if k != "padded_counts"}
    results = {
        "construction": emb.construction,
        "chi": emb.chi,
        "tree_nodes": emb.tree.n,
        "alpha_nominal": emb.alpha_nominal,
        "build": meta,
        "verify": rep.to_json(),
    }
    if emb.construction == MERGED_PARTIAL:
        counts = emb.meta["padded_counts"]
        results["min_padded_fraction"] = min(counts) / emb.meta["tau"]
    if args.dump:
        with open(args.dump, "w") as fh:
            json.dump(emb.to_json(), fh, indent=2, default=_plain)
            fh.write("\n")
    params = {"graph": args.graph, "construction": args.construction, "epsilon": args.epsilon,
              "alpha": args.alpha, "tau_override": args.tau_override, "k": args.k, "trials": args.trials}
    return _report(args, lg, params, results), rep.ok


def _orig_cost(lg: LoadedGraph, g_used: WeightedGraph, F) -> float:
    """Cost in file units of the original (non-satellite) edges of F."""
    g = lg.graph
    return lg.file_cost(sum(g.edges[e][2] for e in F if e < g.m))


def _prepare_groups(lg: LoadedGraph, groups):
    g = lg.graph
    if groups_overlap(groups):
        g2, groups2, _ = make_groups_disjoint(g, groups)
        return g2, groups2, True
    return g, groups, False


def _oracle_or_skip(fn, *a):
    try:
        return fn(*a).cost
    except BudgetExceeded:
        return None


def cmd_online_gst(args):
    lg = load_graph(args.graph, need_root=True)
    r = _root(lg)
    events = load_stream(args.stream, lg)
    if any("group" not in ev for ev in events):
        raise InputError(f"{args.stream}: online-gst expects group events")
    groups = [ev["group"] for ev in events]
    g_used, groups_used, gadget = _prepare_groups(lg, groups)
    emb = _build(args, g_used, r)
    steps = online_gst_driver(g_used, r, emb, None, groups_used)
    out = []
    for t, st in enumerate(steps):
        F = [e for e in st.edges if e < lg.graph.m]
        row = {"t": t, "cost": _orig_cost(lg, g_used, st.edges), "feasible": st.feasible,
               "edges": lg.to_file_edges(F)}
        if args.oracle:
            opt = _oracle_or_skip(opt_group_steiner_tree, lg.graph, r, groups[: t + 1])
            row["oracle"] = None if opt is None else lg.file_cost(opt)
            row["ratio"] = None if opt is None else ratio(row["cost"], lg.file_cost(opt))
        out.append(row)
    params = {"graph": args.graph, "stream": args.stream, "construction": args.construction,
              "epsilon": args.epsilon, "group_gadget": gadget}
    results = {"steps": out, "chi": emb.chi, "tree_nodes": emb.tree.n}
    return _report(args, lg, params, results), all(s.feasible for s in steps)


def cmd_online_gsf(args):
    lg = load_graph(args.graph)
    r = _root(lg, required=False)
    events = load_stream(args.stream, lg)
    if any("pair" not in ev for ev in events):
        raise InputError(f"{args.stream}: online-gsf expects pair events")
    pairs = [ev["pair"] for ev in events]
    emb = _build(args, lg.graph, r)
    steps = online_gsf_driver(lg.graph, emb, None, pairs)
    out = []
    for t, st in enumerate(steps):
        row = {"t": t, "cost": lg.file_cost(st.cost), "feasible": st.feasible,
               "edges": lg.to_file_edges(st.edges)}
        if args.oracle:
            opt = _oracle_or_skip(opt_group_steiner_forest, lg.graph, pairs[: t + 1])
            row["oracle"] = None if opt is None else lg.file_cost(opt)
            row["ratio"] = None if opt is None else ratio(row["cost"], lg.file_cost(opt))
        out.append(row)
    params = {"graph": args.graph, "stream": args.stream, "construction": args.construction,
              "epsilon": args.epsilon}
    return _report(args, lg, params, {"steps": out, "chi": emb.chi}), all(s.feasible for s in steps)


def cmd_partial_gst(args):
    lg = load_graph(args.graph, need_root=True)
    r = _root(lg)
    events = load_stream(args.stream, lg)
    if any("group" not in ev for ev in events):
        raise InputError(f"{args.stream}: partial-gst expects group events")
    groups = [ev["group"] for ev in events]
    for t, ev in enumerate(events):
        if not 1 <= ev["f"] <= len(ev["group"]):
            raise InputError(f"{args.stream}: event {t}.f must lie in [1, {len(ev['group'])}]")
    if not 0 < args.epsilon < 1:
        raise InputError("--epsilon must lie in (0, 1)")
    g_used, groups_used, gadget = _prepare_groups(lg, groups)
    emb = build_construction1(g_used, r, args.embed_epsilon, args.tau_override, _alpha(args.alpha))
    stream = [(grp, ev["f"]) for grp, ev in zip(groups_used, events)]
    steps = partial_gst_general(g_used, r, stream, args.epsilon, emb)
    out = []
    for t, st in enumerate(steps):
        F = [e for e in st.edges if e < lg.graph.m]
        row = {"t": t, "cost": _orig_cost(lg, g_used, st.edges), "connected": st.connected,
               "target": st.target, "edges": lg.to_file_edges(F)}
        if args.oracle:
            fams = [[[v] for v in grp] for grp in groups[: t + 1]]
            fs = [ev["f"] for ev in events[: t + 1]]
            opt = _oracle_or_skip(opt_two_level_partial, lg.graph, r, fams, fs)
            row["oracle"] = None if opt is None else lg.file_cost(opt)
            row["ratio"] = None if opt is None else ratio(row["cost"], lg.file_cost(opt))
        out.append(row)
    params = {"graph": args.graph, "stream": args.stream, "epsilon": args.epsilon,
              "embed_epsilon": args.embed_epsilon, "group_gadget": gadget}
    ok = all(s.connected >= s.target for s in steps)
    return _report(args, lg, params, {"steps": out, "chi": emb.chi}), ok


def _robust(args, kind: str):
    lg = load_graph(args.graph, need_root=(kind == GST))
    g = lg.graph
    r = _root(lg, required=(kind == GST))
    inst = load_scenarios(args.scenarios, lg, kind)
    is_tree = g.m == g.n - 1
    if is_tree:
        tree, edge_of = RootedTree.from_graph(g, r)
        tsol = solve_robust_tree(tree, inst, args.seed, None, 5, args.copies)
        sol = RobustSolution(
            frozenset(edge_of[c] for c in tsol.X0),
            tuple(frozenset(edge_of[c] for c in Xi) for Xi in tsol.X),
            tsol.meta,
        )
    else:
        sol = solve_robust_general(g, r, inst, kind, args.seed, None, 5, args.copies)
    worst, feasible = evaluate_robust(g, sol, inst, r)
    if args.export_lp:
        lp = sol.meta.get("lp")
        with open(args.export_lp, "w") as fh:
            fh.write(lp.to_lp_text() if lp is not None else "\\ no scenarios\nMinimize\n obj: 0\nEnd\n")
    per = []
    for s, Xi, ok in zip(inst.scenarios, sol.X, feasible):
        per.append({"sigma": s.sigma, "second_stage": lg.to_file_edges(Xi),
                    "cost": lg.file_cost(g.weight(sol.X0) + s.sigma * g.weight(Xi)), "feasible": ok})
    results = {
        "on_tree": is_tree,
        ("lp_objective" if is_tree else "copy_tree_lp_objective"): lg.file_cost(sol.meta.get("z", 0.0)),
        "first_stage": lg.to_file_edges(sol.X0),
        "scenarios": per,
        "worst_case_cost": lg.file_cost(worst),
        "rounding_attempts": sol.meta.get("attempts", 0),
        "copies": sol.meta.get("copies", 0),
    }
    if args.oracle:
        try:
            opt = opt_robust(g, r, inst)
            results["oracle"] = lg.file_cost(opt.cost)
            results["ratio"] = ratio(worst, opt.cost)
        except BudgetExceeded as exc:
            results["oracle"] = None
            results["oracle_skipped"] = str(exc)
    params = {"graph": args.graph, "scenarios": args.scenarios, "copies": args.copies}
    return _report(args, lg, params, results), all(feasible)


def cmd_robust_gst(args):
    return _robust(args, GST)


def cmd_robust_gsf(args):
    return _robust(args, GSF)


def cmd_oracle(args):
    data = read_json(args.input, "oracle input")
    lg = graph_from_json(data, args.input, need_root=args.problem in ("gst", "2level"))
    g = lg.graph
    where = args.input
    if args.problem == "gst":
        groups = data.get("groups")
        if not isinstance(groups, list):
            raise InputError(f"{where}: 'groups' list required")
        groups = [[lg.vertex(v, f"{where}: groups[{j}]") for v in grp] for j, grp in enumerate(groups)]
        res = opt_group_steiner_tree(g, g.root, groups)
        results = {"cost": lg.file_cost(res.cost), "edges": lg.to_file_edges(res.edges)}
    elif args.problem == "gsf":
        pairs = data.get("pairs")
        if not isinstance(pairs, list):
            raise InputError(f"{where}: 'pairs' list required")
        pairs = [
            ([lg.vertex(v, f"{where}: pairs[{j}]") for v in a], [lg.vertex(v, f"{where}: pairs[{j}]") for v in b])
            for j, (a, b) in enumerate(pairs)
        ]
        res = opt_group_steiner_forest(g, pairs)
        results = {"cost": lg.file_cost(res.cost), "edges": lg.to_file_edges(res.edges)}
    elif args.problem == "2level":
        fams, fs = data.get("families"), data.get("f")
        if not isinstance(fams, list) or not isinstance(fs, list) or len(fams) != len(fs):
            raise InputError(f"{where}: 'families' and 'f' lists of equal length required")
        fams = [[[lg.vertex(v, f"{where}: families[{i}]") for v in grp] for grp in fam] for i, fam in enumerate(fams)]
        res = opt_two_level_partial(g, g.root, fams, fs)
        results = {"cost": lg.file_cost(res.cost), "edges": lg.to_file_edges(res.edges)}
    else:
        inst = scenarios_from_json(data, lg, where)
        res = opt_robust(g, g.root, inst)
        results = {"cost": lg.file_cost(res.cost), "first_stage": lg.to_file_edges(res.X0),
                   "second_stage": [lg.to_file_edges(x) for x in res.X]}
    params = {"problem": args.problem, "input": args.input}
    return _report(args, lg, params, results), True


def cmd_bench(args):
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError:
        raise InputError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    rng = random.Random(args.seed)
    rows = []
    for n in sizes:
        for _ in range(args.count):
            g = random_connected_graph(rng, n, n // 2)
            t0 = time.perf_counter()
            emb = build_construction1(g, 0, args.epsilon)
            built = time.perf_counter() - t0
            rep = verify_embedding(emb, g, args.trials, args.seed)
            row = {
                "n": n, "m": g.m, "alpha": emb.meta["alpha"], "tau": emb.meta["tau"], "chi": emb.chi,
                "tree_nodes": emb.tree.n, "distinct_trees": emb.meta["distinct_trees"],
                "max_stretch": emb.meta["max_stretch"], "alpha_fwd": rep.alpha_fwd,
                "backward_slack": rep.backward_slack, "verified": rep.ok,
                "min_padded_fraction": min(emb.meta["padded_counts"]) / emb.meta["tau"],
            }
            if args.timing:
                row["build_seconds"] = round(built, 4)
            rows.append(row)
    params = {"sizes": sizes, "count": args.count, "epsilon": args.epsilon, "trials": args.trials}
    return _report(args, None, params, {"runs": rows}), all(r["verified"] for r in rows)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="copytree-embed", description="Copy tree embeddings and the group Steiner solvers built on them.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--timing", action="store_true", help="add wall-clock time (breaks byte stability)")

    def embedding_opts(sp, default_trials=20):
        sp.add_argument("--construction", choices=[MERGED_PARTIAL, FRT_SUPPORT], default=MERGED_PARTIAL)
        sp.add_argument("--epsilon", type=float, default=0.25)
        sp.add_argument("--alpha", default="auto")
        sp.add_argument("--tau-override", type=int, default=None)
        sp.add_argument("--k", type=int, default=None, help="tree count for frt-support")

    for name, fn, trials in (("embed", cmd_embed, 20), ("verify", cmd_verify, 100)):
        sp = sub.add_parser(name)
        sp.add_argument("--graph", required=True)
        embedding_opts(sp)
        sp.add_argument("--trials", type=int, default=trials)
        sp.add_argument("--dump", help="write the embedding as JSON")
        common(sp)
        sp.set_defaults(func=fn)

    for name, fn in (("online-gst", cmd_online_gst), ("online-gsf", cmd_online_gsf)):
        sp = sub.add_parser(name)
        sp.add_argument("--graph", required=True)
        sp.add_argument("--stream", required=True)
        embedding_opts(sp)
        sp.add_argument("--oracle", action="store_true", help="report ratios against brute-force optima")
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("partial-gst")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--stream", required=True)
    sp.add_argument("--epsilon", type=float, default=0.5, help="connection slack of water filling")
    sp.add_argument("--embed-epsilon", type=float, default=0.25)
    sp.add_argument("--alpha", default="auto")
    sp.add_argument("--tau-override", type=int, default=None)
    sp.add_argument("--oracle", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_partial_gst)

    for name, fn in (("robust-gst", cmd_robust_gst), ("robust-gsf", cmd_robust_gsf)):
        sp = sub.add_parser(name)
        sp.add_argument("--graph", required=True)
        sp.add_argument("--scenarios", required=True)
        sp.add_argument("--copies", type=int, default=4, help="constant C in the copy count")
        sp.add_argument("--export-lp", help="write the LP relaxation in LP format")
        sp.add_argument("--oracle", action="store_true")
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("oracle")
    sp.add_argument("--problem", choices=["gst", "gsf", "2level", "robust"], required=True)
    sp.add_argument("--input", required=True)
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bench")
    sp.add_argument("--sizes", default="4,6,8")
    sp.add_argument("--count", type=int, default=2)
    sp.add_argument("--epsilon", type=float, default=0.25)
    sp.add_argument("--trials", type=int, default=20)
    common(sp)
    sp.set_defaults(func=cmd_bench)
    return p


def cmd_verify(args):
    return cmd_embed(args)


def run(argv=None) -> tuple[int, dict | None]:
    try:
        args = build_parser().parse_args(argv)
        started = time.perf_counter()
        report, ok = args.func(args)
        if args.timing:
            report["runtime_seconds"] = round(time.perf_counter() - started, 4)
    except (InputError, GraphError, BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    except (ContractViolation, EmbeddingError, LPInfeasible, LPUnbounded) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE, None
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    text = json.dumps(report, indent=2, default=_plain) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return (EXIT_OK if ok else EXIT_INFEASIBLE), report


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
