"""Hierarchical (2k-1)-stretch distance oracle with bunches and clusters.

Levels ``A_0 = V ⊇ A_1 ⊇ ... ⊇ A_{k-1}`` are nested random samples, each
keeping a member of the previous level with probability ``n^(-1/k)``. Every
node stores its nearest member ``p_i(v)`` of each level and a bunch of nodes
``w`` in ``A_i \\ A_{i+1}`` that are strictly closer than ``A_{i+1}``.

The oracle can be built on a :class:`Graph` (clusters grown by pruned
Dijkstra, which also yields next hops for routing) or on a dense symmetric
distance matrix, which is how the landmark metric is handled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Iterable

import numpy as np

from . import rng
from .graph import INF, Graph, nearest_source
from .landmarks import BuildError

MAX_LEVEL_DRAWS = 64


@dataclass(frozen=True)
class TZQueryTrace:
    estimate: float
    final_witness: int
    level_used: int

    @property
    def swapped(self) -> bool:
        """True when the witness belongs to the second query argument."""
        return self.level_used % 2 == 1


@dataclass
class TZOracle:
    n: int
    k: int
    seed: int
    level_of: np.ndarray  # highest i with v in A_i
    witness: np.ndarray  # (k, n) p_i(v)
    witness_dist: np.ndarray  # (k, n) d(v, A_i)
    bunches: list[dict[int, float]]
    hops: list[dict[int, int]] | None = None  # next hop from v toward each bunch member

    @property
    def size_entries(self) -> int:
        return sum(len(b) for b in self.bunches) + 2 * self.k * self.n

    def level_members(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.level_of >= i)


def sample_levels(
    n: int, k: int, seed: int, first_level: Iterable[int] | None = None, max_draws: int = MAX_LEVEL_DRAWS
) -> np.ndarray:
    """Return ``level_of`` for ``k`` nested levels; redraws until ``A_{k-1}`` is non-empty.

    ``first_level`` fixes ``A_1`` instead of sampling it; higher levels are
    still subsampled from it.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    p = n ** (-1.0 / k)
    forced = None
    if first_level is not None and k > 1:
        forced = np.zeros(n, dtype=bool)
        forced[list(first_level)] = True
        if not forced.any():
            raise ValueError("forced first level is empty")
    for attempt in range(max_draws):
        level = np.zeros(n, dtype=np.int64)
        cur = np.ones(n, dtype=bool)
        if k > 1:
            u = rng.Stream(seed, rng.stream_id(rng.TZ_LEVELS, attempt)).uniforms((k - 1) * n).reshape(k - 1, n)
            for i in range(1, k):
                cur = forced if (i == 1 and forced is not None) else cur & (u[i - 1] < p)
                level[cur] = i
        if cur.any():
            return level
    raise BuildError(f"top level empty after {max_draws} draws")


def _tie_rule(witness: np.ndarray, wdist: np.ndarray) -> None:
    # p_i(v) = p_{i+1}(v) whenever both levels are equally far; keeps p_i(v) in bunch(v).
    k = witness.shape[0]
    for i in range(k - 2, 0, -1):
        same = wdist[i] == wdist[i + 1]
        witness[i, same] = witness[i + 1, same]


def tz_build(g: Graph, k: int, seed: int, first_level: Iterable[int] | None = None) -> TZOracle:
    if not g.connected:
        raise BuildError("oracles require a connected graph")
    n = g.n
    level = sample_levels(n, k, seed, first_level)
    witness = np.zeros((k, n), dtype=np.int64)
    wdist = np.zeros((k, n))
    witness[0] = np.arange(n)
    for i in range(1, k):
        d, near, _ = nearest_source(g, np.flatnonzero(level >= i))
        witness[i], wdist[i] = near, d
    _tie_rule(witness, wdist)

    bunches: list[dict[int, float]] = [{} for _ in range(n)]
    hops: list[dict[int, int]] = [{} for _ in range(n)]
    adj = g.adj
    for w in range(n):
        i = int(level[w])
        thr = wdist[i + 1] if i + 1 < k else None
        # Cluster of w: nodes strictly closer to w than to A_{i+1}.
        dist = {w: 0.0}
        parent = {w: w}
        done: set[int] = set()
        heap = [(0.0, w)]
        while heap:
            d, x = heappop(heap)
            if x in done:
                continue
            done.add(x)
            bunches[x][w] = d
            hops[x][w] = parent[x]
            for y, wt in adj[x].items():
                if y in done:
                    continue
                nd = d + wt
                if thr is not None and not nd < thr[y]:
                    continue
                old = dist.get(y)
                if old is None or nd < old:
                    dist[y] = nd
                    parent[y] = x
                    heappush(heap, (nd, y))
                elif nd == old and x < parent[y]:
                    parent[y] = x
    return TZOracle(n, k, seed, level, witness, wdist, _sorted_bunches(bunches), _sorted_bunches(hops))


def tz_build_metric(dist: np.ndarray, k: int, seed: int) -> TZOracle:
    """Build over the complete graph whose edge weights are the symmetric matrix ``dist``."""
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    level = sample_levels(n, k, seed)
    witness = np.zeros((k, n), dtype=np.int64)
    wdist = np.zeros((k + 1, n))
    witness[0] = np.arange(n)
    ar = np.arange(n)
    for i in range(1, k):
        cols = np.flatnonzero(level >= i)
        idx = np.argmin(dist[:, cols], axis=1)
        witness[i] = cols[idx]
        wdist[i] = dist[ar, cols[idx]]
    wdist[k] = INF
    _tie_rule(witness, wdist[:k])
    # bunch(v) = {w : d(v, w) < d(v, A_{level(w)+1})}
    thr = wdist[level + 1]  # thr[j, v] for column owner w = j
    member = dist < thr.T
    bunches = []
    for v in range(n):
        cols = np.flatnonzero(member[v])
        bunches.append(dict(zip(cols.tolist(), dist[v, cols].tolist())))
    return TZOracle(n, k, seed, level, witness, wdist[:k].copy(), bunches)


def _sorted_bunches(rows):
    return [dict(sorted(r.items())) for r in rows]


def tz_query(o: TZOracle, u: int, v: int) -> TZQueryTrace:
    w = u
    i = 0
    while w not in o.bunches[v]:
        i += 1
        if i >= o.k:
            raise AssertionError("top-level witness missing from a bunch")
        u, v = v, u
        w = int(o.witness[i, u])
    return TZQueryTrace(float(o.witness_dist[i, u]) + o.bunches[v][w], w, i)


def tz_row(o: TZOracle, u: int, clusters: "ClusterIndex") -> np.ndarray:
    """``tz_query(o, u, v).estimate`` for every ``v`` at once."""
    n = o.n
    est = np.full(n, np.nan)
    done = np.zeros(n, dtype=bool)
    own = np.zeros(n, dtype=bool)
    own_d = np.zeros(n)
    keys = np.fromiter(o.bunches[u].keys(), dtype=np.int64, count=len(o.bunches[u]))
    own[keys] = True
    own_d[keys] = np.fromiter(o.bunches[u].values(), dtype=np.float64, count=len(keys))
    for i in range(o.k):
        if i % 2 == 0:
            w = int(o.witness[i, u])
            vs, dv = clusters.members(w)
            fresh = ~done[vs]
            vs, dv = vs[fresh], dv[fresh]
            est[vs] = o.witness_dist[i, u] + dv
            done[vs] = True
        else:
            wv = o.witness[i]
            hit = ~done & own[wv]
            est[hit] = o.witness_dist[i, hit] + own_d[wv[hit]]
            done |= hit
        if done.all():
            break
    return est


class ClusterIndex:
    """Inverse of the bunches: for each ``w`` the nodes whose bunch holds ``w``."""

    def __init__(self, o: TZOracle) -> None:
        owners, targets, dists = [], [], []
        for v, b in enumerate(o.bunches):
            owners.extend([v] * len(b))
            targets.extend(b.keys())
            dists.extend(b.values())
        t = np.asarray(targets, dtype=np.int64)
        order = np.lexsort((np.asarray(owners, dtype=np.int64), t))
        self.idx = np.asarray(owners, dtype=np.int64)[order]
        self.dist = np.asarray(dists, dtype=np.float64)[order]
        self.ptr = np.zeros(o.n + 1, dtype=np.int64)
        np.add.at(self.ptr, t + 1, 1)
        np.cumsum(self.ptr, out=self.ptr)

    def members(self, w: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.ptr[w], self.ptr[w + 1]
        return self.idx[s:e], self.dist[s:e]


def tz_matrix(o: TZOracle) -> np.ndarray:
    """All pairwise estimates; used for small metrics such as the landmark graph."""
    clusters = ClusterIndex(o)
    return np.vstack([tz_row(o, u, clusters) for u in range(o.n)]) if o.n else np.zeros((0, 0))


# ---------------------------------------------------------------------------
# routing tables
# ---------------------------------------------------------------------------


def tz_routing_tables(o: TZOracle, g: Graph | None = None) -> list[dict[int, int]]:
    """Per node, the next hop toward every bunch member (top-level nodes included)."""
    if o.hops is None:
        raise ValueError("routing tables need an oracle built on a graph")
    if g is not None and g.n != o.n:
        raise ValueError("graph does not match the oracle")
    return [{w: h for w, h in row.items() if w != v} for v, row in enumerate(o.hops)]


def forward(tables: list[dict[int, int]], x: int, w: int) -> list[int]:
    """Hop-by-hop walk from ``x`` to ``w`` using only the routers' tables."""
    path = [x]
    while x != w:
        x = tables[x][w]
        path.append(x)
        if len(path) > len(tables) + 1:
            raise RuntimeError("forwarding loop")
    return path


def tz_route(o: TZOracle, tables: list[dict[int, int]], src: int, dst: int) -> tuple[list[int], TZQueryTrace]:
    """Table-driven route for ``tz_query(dst, src)``: the witness is taken from ``dst``'s side first."""
    trace = tz_query(o, dst, src)
    w = trace.final_witness
    head = forward(tables, src, w)
    tail = forward(tables, dst, w)
    return head + tail[-2::-1], trace


def bunch_brute_force(dist: np.ndarray, level_of: np.ndarray, k: int) -> list[dict[int, float]]:
    """Bunches straight from the definition, given all-pairs distances."""
    n = dist.shape[0]
    out = []
    for v in range(n):
        near = [math.inf] * (k + 1)
        for i in range(k):
            members = np.flatnonzero(level_of >= i)
            near[i] = float(dist[v, members].min()) if members.size else math.inf
        row = {}
        for w in range(n):
            if dist[v, w] < near[int(level_of[w]) + 1]:
                row[w] = float(dist[v, w])
        out.append(row)
    return out
