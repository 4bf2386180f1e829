import math

import pytest

from copytree_embed.lp import LinearProgram, LPInfeasible, LPUnbounded, solve_lp
from copytree_embed.oracle import lp_vertex_enumeration


def test_trivial_lp():
    lp = LinearProgram("t")
    z = lp.var("z", cost=1.0)
    lp.add({z: 1.0}, ">=", 3.0)
    sol = solve_lp(lp)
    assert sol.objective == pytest.approx(3.0)
    assert sol.value("z") == pytest.approx(3.0)


def test_matches_vertex_enumeration():
    lp = LinearProgram()
    x = lp.var("x", ub=4.0, cost=-1.0)
    y = lp.var("y", ub=4.0, cost=-2.0)
    lp.add({x: 1.0, y: 1.0}, "<=", 5.0)
    lp.add({x: 1.0, y: -1.0}, "==", 1.0)
    assert solve_lp(lp).objective == pytest.approx(lp_vertex_enumeration(lp))


def test_infeasible_and_unbounded():
    lp = LinearProgram()
    x = lp.var("x", ub=1.0)
    lp.add({x: 1.0}, ">=", 2.0)
    with pytest.raises(LPInfeasible):
        solve_lp(lp)
    lp = LinearProgram()
    x = lp.var("x", lb=-math.inf, cost=1.0)
    with pytest.raises(LPUnbounded):
        solve_lp(lp)


def test_bad_sense():
    lp = LinearProgram()
    x = lp.var("x")
    with pytest.raises(ValueError):
        lp.add({x: 1.0}, "<", 1.0)


def test_lp_text():
    lp = LinearProgram("demo")
    x = lp.var("x", cost=2.0)
    y = lp.var("y", ub=1.0)
    lp.add({x: 1.0, y: -3.0}, ">=", 1.0, "row")
    text = lp.to_lp_text()
    assert "Minimize\n obj: 2 x\n" in text
    assert " row: x - 3 y >= 1\n" in text
    assert " 0 <= y <= 1\n" in text
    assert text.endswith("End\n")
