import random

import pytest

from copytree_embed.graph import WeightedGraph


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def two_vertex():
    return WeightedGraph(2, ((0, 1, 1.0),), 0)


@pytest.fixture
def path3():
    # r=0 -1- 1 -2- 2
    return WeightedGraph(3, ((0, 1, 1.0), (1, 2, 2.0)), 0)


@pytest.fixture
def star_abc():
    # r=0; a=1 (w 1); b=2 (w 1); c=3 (w 2)
    return WeightedGraph(4, ((0, 1, 1.0), (0, 2, 1.0), (0, 3, 2.0)), 0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
