from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from sparse_oracles.graph import Graph, gen_geometric, gen_gnm
from sparse_oracles.landmarks import sample_landmarks

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")

ACCEPTANCE_LINES: list[str] = []

# path v0-v1-v2-v3-v4
P5_EDGES = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)]
# u=0, l1=1, m=2, v=3, l2=4
W5_EDGES = [(0, 1, 1.0), (0, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)]
U, L1, M, V, L2 = 0, 1, 2, 3, 4


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:2d}: {detail}")


def pytest_terminal_summary(terminalreporter) -> None:
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def p5() -> Graph:
    return Graph(5, P5_EDGES)


@pytest.fixture
def w5() -> Graph:
    return Graph(5, W5_EDGES)


@pytest.fixture
def p5_landmarks(p5):
    return sample_landmarks(p5, "forced", forced=[2])


@pytest.fixture
def w5_landmarks(w5):
    return sample_landmarks(w5, "forced", forced=[L1, L2])


@pytest.fixture
def star5() -> Graph:
    """Center 0 with leaves 1..4."""
    return Graph(5, [(0, i, 1.0) for i in range(1, 5)])


def small_connected(seed: int, n: int = 64, m: int = 160, weighted: bool = False) -> Graph:
    s = seed
    while True:
        g = gen_geometric(n, 6, s) if weighted else gen_gnm(n, m, s)
        if g.connected:
            return g
        s += 1000


@pytest.fixture(scope="session")
def small_graphs() -> list[Graph]:
    """A mixed bag of connected unit-weight and Euclidean graphs."""
    return [small_connected(s) for s in range(6)] + [small_connected(s, weighted=True) for s in range(4)]


def random_weighted(seed: int, n: int = 40, m: int = 90) -> Graph:
    r = np.random.default_rng(seed)
    g = gen_gnm(n, m, seed)
    return Graph(n, [(a, b, float(r.integers(1, 9))) for a, b, _ in g.edges])
