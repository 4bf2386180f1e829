import json

import pytest

from copytree_embed.formats import (
    InputError,
    graph_from_json,
    load_graph,
    scenarios_from_json,
    stream_from_json,
)


def test_zero_edges_contract():
    lg = graph_from_json({"n": 3, "root": 0, "edges": [[0, 1, 0], [1, 2, 2]]})
    assert lg.graph.n == 2 and lg.contracted == 1
    assert lg.vertex(1, "x") == lg.vertex(0, "x")
    assert lg.to_file_edges({0}) == [1]


def test_scaling_when_below_one():
    lg = graph_from_json({"n": 2, "root": 0, "edges": [[0, 1, 0.25]]})
    assert lg.scale == 4.0
    assert lg.graph.edges[0][2] == 1.0
    assert lg.file_cost(1.0) == 0.25


@pytest.mark.parametrize(
    "data, message",
    [
        ({"n": 2, "root": 0, "edges": [[0, 1]]}, r"edges\[0\]"),
        ({"n": 2, "root": 5, "edges": [[0, 1, 1]]}, "root 5"),
        ({"n": 3, "root": 0, "edges": [[0, 1, 1]]}, "connected"),
        ({"n": 2, "root": 0, "edges": [[0, 1, -1]]}, "nonnegative"),
        ({"n": 2, "root": 0, "edges": [[0, 0, 1]]}, "self-loop"),
        ([], "expected an object"),
    ],
)
def test_graph_errors(data, message):
    with pytest.raises(InputError, match=message):
        graph_from_json(data, "g.json")


def test_missing_root_when_needed():
    with pytest.raises(InputError, match="root"):
        graph_from_json({"n": 2, "edges": [[0, 1, 1]]}, need_root=True)


def test_bad_json_has_location(tmp_path):
    p = tmp_path / "g.json"
    p.write_text('{"n": 2,\n "edges": [}')
    with pytest.raises(InputError, match=r"g.json:2:"):
        load_graph(p)


def test_streams():
    lg = graph_from_json({"n": 3, "root": 0, "edges": [[0, 1, 1], [1, 2, 1]]})
    ev = stream_from_json([{"group": [2, 1, 2]}, {"pair": [[0], [2]]}, {"group": [1], "f": 1}], lg)
    assert ev[0] == {"group": [1, 2], "f": 1}
    assert ev[1] == {"pair": ([0], [2])}
    with pytest.raises(InputError, match="event 0"):
        stream_from_json({"events": [{"group": [7]}]}, lg)
    with pytest.raises(InputError, match="needs"):
        stream_from_json([{}], lg)


def test_scenarios():
    lg = graph_from_json({"n": 3, "root": 0, "edges": [[0, 1, 1], [1, 2, 1]]})
    inst = scenarios_from_json({"scenarios": [{"sigma": 2, "groups": [[2]]}]}, lg)
    assert inst.kind == "gst" and inst.m == 1
    with pytest.raises(InputError, match="sigma"):
        scenarios_from_json({"scenarios": [{"sigma": 0.5, "groups": [[2]]}]}, lg)
    mixed = {"scenarios": [{"sigma": 2, "groups": [[2]]}, {"sigma": 2, "pairs": [[[1], [2]]]}]}
    with pytest.raises(InputError, match="mix"):
        scenarios_from_json(mixed, lg)
    with pytest.raises(InputError, match="expected gsf"):
        scenarios_from_json({"scenarios": [{"sigma": 2, "groups": [[2]]}]}, lg, kind="gsf")
