"""Weighted undirected graphs, generators, shortest paths and the exact oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra
from scipy.spatial import cKDTree

from . import rng

INF = math.inf
VERIFY_CAP = 4096


class GraphError(ValueError):
    """Invalid graph input or a graph that violates an operation's precondition."""


class ParseError(GraphError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class Graph:
    """Immutable weighted undirected simple graph on nodes ``0..n-1``.

    ``adj[v]`` maps each neighbor of ``v`` to the edge weight, in ascending
    neighbor order. Parallel edges are collapsed to their minimum weight.
    """

    __slots__ = ("n", "edges", "adj", "connected")

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]]) -> None:
        if n < 0:
            raise GraphError("node count must be non-negative")
        best: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) has a node id outside [0, {n})")
            if u == v:
                raise GraphError(f"self-loop on node {u}")
            if not w >= 0.0 or math.isinf(w):
                raise GraphError(f"edge ({u}, {v}) has invalid weight {w}")
            key = (u, v) if u < v else (v, u)
            old = best.get(key)
            if old is None or w < old:
                best[key] = w
        nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for (u, v), w in best.items():
            nbrs[u].append((v, w))
            nbrs[v].append((u, w))
        self.n = n
        self.edges = tuple(sorted((u, v, w) for (u, v), w in best.items()))
        self.adj = tuple(dict(sorted(row)) for row in nbrs)
        self.connected = _is_connected(self.adj)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def neighbors(self, v: int) -> dict[int, float]:
        return self.adj[v]

    def weight(self, u: int, v: int) -> float:
        return self.adj[u][v]

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    @property
    def avg_degree(self) -> float:
        """Average degree ``2m/n``; the sparsity parameter of the oracles."""
        return 2.0 * self.m / self.n if self.n else 0.0

    @property
    def unit_weights(self) -> bool:
        return all(w == 1.0 for _, _, w in self.edges)

    def path_weight(self, path: list[int]) -> float:
        """Total weight of a walk; raises ``KeyError`` if two consecutive nodes are not adjacent."""
        total = 0.0
        for a, b in zip(path, path[1:]):
            total += self.adj[a][b]
        return total

    def to_csr(self) -> sp.csr_matrix:
        """Symmetric sparse adjacency; zero-weight edges are stored explicitly."""
        if not self.edges:
            return sp.csr_matrix((self.n, self.n))
        e = np.asarray(self.edges, dtype=np.float64)
        u = e[:, 0].astype(np.int64)
        v = e[:, 1].astype(np.int64)
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.concatenate([e[:, 2], e[:, 2]])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, connected={self.connected})"


def _is_connected(adj: tuple[dict[int, float], ...]) -> bool:
    n = len(adj)
    if n <= 1:
        return True
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = True
                count += 1
                stack.append(y)
    return count == n


# ---------------------------------------------------------------------------
# edge-list text format
# ---------------------------------------------------------------------------


def load_graph(text: str) -> Graph:
    """Parse the edge-list format: a header ``n m`` then ``m`` lines ``u v [w]``.

    Lines starting with ``#`` and blank lines are ignored. Errors name the
    offending line number.
    """
    header: tuple[int, int] | None = None
    header_line = 0
    edges: list[tuple[int, int, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2:
                raise ParseError(lineno, "expected header 'n m'")
            try:
                n, m = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(lineno, "header values must be integers") from None
            if n < 0 or m < 0:
                raise ParseError(lineno, "header values must be non-negative")
            header, header_line = (n, m), lineno
            continue
        if len(parts) not in (2, 3):
            raise ParseError(lineno, "expected 'u v' or 'u v w'")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError(lineno, "malformed edge") from None
        n = header[0]
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(lineno, f"node id out of range [0, {n})")
        if u == v:
            raise ParseError(lineno, "self-loop")
        if not w >= 0.0 or math.isinf(w):
            raise ParseError(lineno, "negative or non-finite weight")
        edges.append((u, v, w))
    if header is None:
        raise ParseError(1, "missing header 'n m'")
    if len(edges) != header[1]:
        raise ParseError(header_line, f"header declares {header[1]} edges, found {len(edges)}")
    return Graph(header[0], edges)


def dump_graph(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {v} {w!r}" for u, v, w in g.edges)
    return "\n".join(lines) + "\n"


def read_graph(path: str | Path) -> Graph:
    return load_graph(Path(path).read_text(encoding="utf-8"))


def write_graph(g: Graph, path: str | Path) -> None:
    Path(path).write_text(dump_graph(g), encoding="utf-8")


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def gen_gnm(n: int, m: int, seed: int) -> Graph:
    """Uniform random graph with exactly ``m`` distinct unit-weight edges.

    Pairs are drawn as two independent node ids, discarding self-pairs and
    repeats. When ``m`` exceeds half of all pairs the complement is sampled
    instead.
    """
    total = n * (n - 1) // 2
    if m < 0 or m > total:
        raise ValueError(f"m={m} outside [0, {total}] for n={n}")
    complement = m > total // 2
    want = total - m if complement else m
    stream = rng.Stream(seed, rng.stream_id(rng.GNM))
    chosen: dict[tuple[int, int], None] = {}
    while len(chosen) < want:
        batch = max(16, 2 * (want - len(chosen)))
        ends = stream.integers(n, 2 * batch).reshape(batch, 2)
        for a, b in ends.tolist():
            if a == b:
                continue
            key = (a, b) if a < b else (b, a)
            if key not in chosen:
                chosen[key] = None
                if len(chosen) == want:
                    break
    if complement:
        pairs = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in chosen]
    else:
        pairs = list(chosen)
    return Graph(n, ((a, b, 1.0) for a, b in pairs))


def geometric_radius(n: int, target_avg_degree: float) -> float:
    return math.sqrt(target_avg_degree / (math.pi * (n - 1)))


def gen_geometric(n: int, target_avg_degree: float, seed: int) -> Graph:
    """Random geometric graph on the unit square with Euclidean edge weights."""
    if n < 2:
        raise ValueError("geometric graphs need n >= 2")
    pts = rng.Stream(seed, rng.stream_id(rng.GEOMETRIC)).uniforms(2 * n).reshape(n, 2)
    r = geometric_radius(n, target_avg_degree)
    pairs = cKDTree(pts).query_pairs(r, output_type="ndarray")
    if len(pairs):
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    w = np.hypot(*(pts[pairs[:, 0]] - pts[pairs[:, 1]]).T) if len(pairs) else []
    return Graph(n, ((int(a), int(b), float(x)) for (a, b), x in zip(pairs, w)))


def connected_instance(make: Callable[[int], Graph], seed: int, max_retries: int = 100) -> tuple[Graph, int]:
    """Call ``make(seed)``, ``make(seed + 1)``, ... until the graph is connected."""
    for attempt in range(max_retries):
        g = make(seed + attempt)
        if g.connected:
            return g, seed + attempt
    raise GraphError(f"no connected instance within {max_retries} seeds starting at {seed}")


def largest_component(g: Graph) -> tuple[Graph, np.ndarray]:
    """The largest connected component relabelled ``0..n'-1`` (ties: the one holding the lowest id).

    Returns the subgraph and the original id of each new node.
    """
    if g.n == 0 or g.connected:
        return g, np.arange(g.n)
    _, labels = connected_components(g.to_csr(), directed=False)
    counts = np.bincount(labels)
    keep = np.flatnonzero(labels == int(np.argmax(counts)))
    new = np.full(g.n, -1, dtype=np.int64)
    new[keep] = np.arange(keep.size)
    return Graph(keep.size, ((new[u], new[v], w) for u, v, w in g.edges if new[u] >= 0)), keep


# ---------------------------------------------------------------------------
# shortest paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistanceTable:
    source: int
    dist: list[float]
    parent: list[int]

    def path_to(self, v: int) -> list[int]:
        """Tree path ``source -> v``."""
        out = [v]
        while v != self.source:
            v = self.parent[v]
            out.append(v)
        out.reverse()
        return out


@dataclass
class TruncatedSearchResult:
    source: int
    settled: dict[int, tuple[float, int]]
    stop_reason: str
    parent: dict[int, int] = field(default_factory=dict)

    def path_to(self, v: int) -> list[int]:
        out = [v]
        while v != self.source:
            v = self.parent[v]
            out.append(v)
        out.reverse()
        return out


def settle_order(g: Graph, source: int) -> Iterator[tuple[int, float, int]]:
    """Yield ``(node, distance, parent)`` in Dijkstra settle order.

    Nodes are settled by nondecreasing distance, equal distances by node id.
    Among equally short predecessors the lowest id becomes the parent. The
    source reports itself as its parent.
    """
    adj = g.adj
    dist = {source: 0.0}
    parent = {source: source}
    done: set[int] = set()
    heap = [(0.0, source)]
    while heap:
        d, x = heappop(heap)
        if x in done:
            continue
        done.add(x)
        yield x, d, parent[x]
        for y, w in adj[x].items():
            if y in done:
                continue
            nd = d + w
            old = dist.get(y)
            if old is None or nd < old:
                dist[y] = nd
                parent[y] = x
                heappush(heap, (nd, y))
            elif nd == old and x < parent[y]:
                parent[y] = x


def dijkstra(g: Graph, source: int) -> DistanceTable:
    if not 0 <= source < g.n:
        raise GraphError(f"source {source} out of range")
    # same settle order and parent rule as settle_order, with list-backed state
    adj = g.adj
    dist = [INF] * g.n
    parent = [-1] * g.n
    done = bytearray(g.n)
    dist[source] = 0.0
    parent[source] = source
    heap = [(0.0, source)]
    while heap:
        d, x = heappop(heap)
        if done[x]:
            continue
        done[x] = 1
        for y, w in adj[x].items():
            if done[y]:
                continue
            nd = d + w
            old = dist[y]
            if nd < old:
                dist[y] = nd
                parent[y] = x
                heappush(heap, (nd, y))
            elif nd == old and x < parent[y]:
                parent[y] = x
    return DistanceTable(source, dist, parent)


def truncated_dijkstra(
    g: Graph, source: int, *, radius: float | None = None, count: int | None = None
) -> TruncatedSearchResult:
    """Dijkstra from ``source`` that stops early.

    ``radius=r`` settles exactly the nodes at distance strictly below ``r``;
    ``count=c`` settles the ``c`` nearest nodes. Each settled node maps to
    ``(distance, first_hop)`` where the first hop is the node after the source
    on the tree path (the source maps to itself).
    """
    if (radius is None) == (count is None):
        raise ValueError("give exactly one of radius or count")
    if radius is not None and radius < 0:
        raise ValueError("radius must be non-negative")
    if count is not None and count < 0:
        raise ValueError("count must be non-negative")
    settled: dict[int, tuple[float, int]] = {}
    parent: dict[int, int] = {}
    reason = "exhausted"
    if count == 0:
        return TruncatedSearchResult(source, settled, "count_reached", parent)
    for x, d, p in settle_order(g, source):
        if radius is not None and d >= radius:
            reason = "radius_reached"
            break
        parent[x] = p
        settled[x] = (d, x if p == source else settled[p][1]) if x != source else (d, source)
        if count is not None and len(settled) >= count:
            reason = "count_reached"
            break
    return TruncatedSearchResult(source, settled, reason, parent)


# ---------------------------------------------------------------------------
# exact verification oracle
# ---------------------------------------------------------------------------


def exact_oracle(
    g: Graph,
    *,
    sources: Iterable[int] | None = None,
    cap: int = VERIFY_CAP,
    require_connected: bool = True,
    return_predecessors: bool = False,
):
    """Exact distances (all pairs, or rows for ``sources``) for verification.

    Backed by scipy's compiled Dijkstra so that it stays independent of the
    library's own search code. Refuses graphs above ``cap`` nodes.
    """
    if g.n > cap:
        raise GraphError(f"n={g.n} exceeds the verification cap {cap}")
    if require_connected and not g.connected:
        raise GraphError("exact oracle requires a connected graph")
    idx = None if sources is None else np.asarray(list(sources), dtype=np.int64)
    out = _csgraph_dijkstra(
        g.to_csr(), directed=True, indices=idx, return_predecessors=return_predecessors
    )
    return out


def heaviest_edges(g: Graph, pred: np.ndarray, sources: Iterable[int] | None = None) -> np.ndarray:
    """Heaviest edge weight on each tree path ``source -> v`` given predecessor rows.

    ``pred`` is the predecessor matrix returned by :func:`exact_oracle`; row
    ``i`` belongs to ``sources[i]`` (all nodes when ``sources`` is None).
    Entries for the source itself and unreachable nodes are 0.
    """
    pred = np.asarray(pred)
    rows, n = pred.shape
    src = np.arange(rows) if sources is None else np.asarray(list(sources), dtype=np.int64)
    anc = pred.copy()
    root = anc < 0
    anc[root] = np.broadcast_to(src[:, None], (rows, n))[root]
    csr = g.to_csr()
    cols = np.broadcast_to(np.arange(n), (rows, n))
    w = np.asarray(csr[anc.ravel(), cols.ravel()]).reshape(rows, n)
    w[root] = 0.0
    best = w
    ar = np.arange(rows)[:, None]
    while True:
        nxt = anc[ar, anc]
        if np.array_equal(nxt, anc):
            break
        best = np.maximum(best, best[ar, anc])
        anc = nxt
    return np.maximum(best, best[ar, anc])


def nearest_source(g: Graph, sources: Iterable[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Multi-source Dijkstra returning ``(dist, nearest source, parent)`` per node.

    Each node gets the lexicographically smallest ``(distance, source id)``;
    parents follow that source's tree with lowest-id tie-breaking. Sources are
    their own parents; unreachable nodes get ``inf`` / ``-1`` / ``-1``.
    """
    n = g.n
    dist = np.full(n, INF)
    near = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    adj = g.adj
    heap = [(0.0, s, s, s) for s in sorted(set(int(s) for s in sources))]
    done = [False] * n
    while heap:
        d, s, x, p = heappop(heap)
        if done[x]:
            continue
        done[x] = True
        dist[x], near[x], parent[x] = d, s, p
        for y, w in adj[x].items():
            if not done[y]:
                heappush(heap, (d + w, s, y, x))
    return dist, near, parent
