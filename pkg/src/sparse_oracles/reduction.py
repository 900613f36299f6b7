"""Average-degree to maximum-degree reduction.

Each node ``v`` is split into ``ceil(deg(v) / delta)`` copies joined by a
chain of weight-0 edges; ``v``'s incident edges (sorted by neighbor id) are
dealt out ``delta`` at a time to consecutive copies. An original edge becomes
one edge between the copy of each endpoint it was dealt to, so distances
between first copies equal distances in the original graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Graph, exact_oracle


@dataclass(frozen=True)
class ReducedGraph:
    gd: Graph
    copies: tuple[tuple[int, ...], ...]
    origin: tuple[int, ...]
    delta: int


def copy_count(deg: int, delta: int) -> int:
    return max(1, math.ceil(deg / delta))


def reduce(g: Graph, delta: int) -> ReducedGraph:
    if delta < 1:
        raise ValueError("delta must be >= 1")
    copies: list[tuple[int, ...]] = []
    origin: list[int] = []
    for v in range(g.n):
        first = len(origin)
        count = copy_count(g.degree(v), delta)
        copies.append(tuple(range(first, first + count)))
        origin.extend([v] * count)

    def dealt(v: int, neighbor: int, position: dict[int, dict[int, int]]) -> int:
        return copies[v][position[v][neighbor] // delta]

    position = {v: {x: i for i, x in enumerate(g.adj[v])} for v in range(g.n)}
    edges = [(dealt(u, v, position), dealt(v, u, position), w) for u, v, w in g.edges]
    for chain in copies:
        edges.extend((a, b, 0.0) for a, b in zip(chain, chain[1:]))
    return ReducedGraph(Graph(len(origin), edges), tuple(copies), tuple(origin), delta)


def distance_preservation_check(g: Graph, rg: ReducedGraph) -> float:
    """Largest ``|d_G(u, v) - d_GΔ(u_1, v_1)|`` over all pairs (0 when preserved).

    Pairs disconnected in both graphs count as agreeing; a pair disconnected in
    only one graph reports ``inf``.
    """
    d = exact_oracle(g, require_connected=False)
    first = np.array([c[0] for c in rg.copies], dtype=np.int64)
    dd = exact_oracle(rg.gd, sources=first, require_connected=False)[:, first]
    fin_d, fin_dd = np.isfinite(d), np.isfinite(dd)
    diff = np.zeros_like(d)
    both = fin_d & fin_dd
    diff[both] = np.abs(d[both] - dd[both])
    diff[fin_d != fin_dd] = np.inf
    return float(diff.max()) if diff.size else 0.0


def degree_proportional_probability(v: int, g: Graph, alpha: float, delta: float) -> float:
    """Sampling probability ``min(1, ceil(deg(v) / delta) / alpha)``."""
    if alpha < 1 or delta <= 0:
        raise ValueError("need alpha >= 1 and delta > 0")
    return min(1.0, math.ceil(g.degree(v) / delta) / alpha)


def write_copies(rg: ReducedGraph, path: str | Path) -> None:
    """Sidecar mapping, one line per original node: ``orig copy0 copy1 ...``."""
    lines = [" ".join(map(str, (v, *c))) for v, c in enumerate(rg.copies)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_copies(path: str | Path) -> tuple[tuple[int, ...], ...]:
    out: dict[int, tuple[int, ...]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            head, *rest = (int(x) for x in line.split())
            out[head] = tuple(rest)
    return tuple(out[v] for v in range(len(out)))
