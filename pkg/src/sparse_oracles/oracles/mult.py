"""Stretch-(4k-1) oracle: a hierarchical oracle over the landmark metric.

Instead of full landmark tables, the landmarks form a complete graph whose
edge weights are their exact distances, and a (2k-1)-stretch oracle over that
graph answers the fallback ``r_u + est(l(u), l(v)) + r_v``. The front half of
the query (vicinity lookups and intersections) is shared with the stretch-2
oracle.

For path retrieval each landmark keeps its shortest-path-tree parents only
along paths to the landmarks whose sub-oracle routes may use it; these leg
tables and the forest toward each node's landmark are reported separately
from ``size_entries``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..graph import Graph, dijkstra, nearest_source
from ..landmarks import (
    BallInfo,
    BuildError,
    LandmarkContext,
    LandmarkSet,
    VicinityInfo,
    las_vegas_build,
    require_connected,
    sample_landmarks,
)
from ..tz import TZOracle, tz_build_metric, tz_matrix, tz_query
from .common import (
    Branch,
    NodeIndex,
    QueryResult,
    Row,
    VicinityOracleMixin,
    direct_lookup,
    direct_row,
    finish_row,
    intersect,
    intersect_row,
    join,
    meeting_path,
    start_row,
)

SIZE_CONSTANT = 4.0


@dataclass
class LandmarkMetric:
    """Sub-oracle over the landmark complete graph plus the retrieval support."""

    landmark_ids: np.ndarray
    sub: TZOracle
    nearest: np.ndarray
    radius: np.ndarray
    forest_parent: np.ndarray  # parent toward the node's landmark
    legs: dict[int, dict[int, int]]  # landmark -> tree parents on its legs
    lindex: dict[int, int] = field(init=False, repr=False)
    _matrix: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        self.lindex = {int(l): i for i, l in enumerate(self.landmark_ids)}

    @property
    def support_entries(self) -> int:
        return self.forest_parent.size + sum(len(x) for x in self.legs.values())

    def estimate(self, a: int, b: int) -> float:
        """Sub-oracle distance between landmarks ``a`` and ``b`` (node ids)."""
        return tz_query(self.sub, self.lindex[a], self.lindex[b]).estimate

    def matrix(self) -> np.ndarray:
        """All sub-oracle estimates, indexed densely; computed once on demand."""
        if self._matrix is None:
            self._matrix = tz_matrix(self.sub)
        return self._matrix

    def dense(self, nodes: np.ndarray) -> np.ndarray:
        return np.array([self.lindex[int(l)] for l in self.nearest[nodes]], dtype=np.int64)

    def to_landmark(self, x: int) -> list[int]:
        """Forest walk ``x -> l(x)``."""
        out = [x]
        target = int(self.nearest[x])
        while x != target:
            x = int(self.forest_parent[x])
            out.append(x)
        return out

    def route(self, a: int, b: int) -> list[int]:
        """Graph walk realising the sub-oracle estimate between landmarks ``a`` and ``b``."""
        trace = tz_query(self.sub, self.lindex[a], self.lindex[b])
        w = int(self.landmark_ids[trace.final_witness])
        return join(self._leg(w, a)[::-1], self._leg(w, b))

    def _leg(self, w: int, x: int) -> list[int]:
        parents = self.legs[w]
        out = [x]
        while x != w:
            x = parents[x]
            out.append(x)
        out.reverse()
        return out


def build_landmark_metric(g: Graph, L: LandmarkSet, k: int, seed: int, attempt: int = 0) -> LandmarkMetric:
    ids = L.ids
    tables = [dijkstra(g, int(l)) for l in ids]
    full = np.array([t.dist for t in tables], dtype=np.float64)
    metric = full[:, ids]
    metric = np.minimum(metric, metric.T)
    _, near, fparent = nearest_source(g, ids)
    dist_near = full[np.searchsorted(ids, near), np.arange(g.n)]
    near[ids] = ids
    dist_near[ids] = 0.0
    sub = tz_build_metric(metric, k, seed + attempt)
    # Leg support: landmark a needs tree paths to every landmark whose bunch
    # holds it and every landmark it is a witness for.
    needs: list[set[int]] = [set() for _ in ids]
    for x, bunch in enumerate(sub.bunches):
        for a in bunch:
            needs[a].add(x)
    for i in range(sub.k):
        for x, a in enumerate(sub.witness[i].tolist()):
            needs[a].add(x)
    legs: dict[int, dict[int, int]] = {}
    for a, targets in enumerate(needs):
        root = int(ids[a])
        parent = tables[a].parent
        keep: dict[int, int] = {}
        for x in sorted(targets):
            y = int(ids[x])
            while y != root and y not in keep:
                keep[y] = parent[y]
                y = parent[y]
        legs[root] = keep
    return LandmarkMetric(ids, sub, near, dist_near, fparent, legs)


@dataclass
class MultOracle(VicinityOracleMixin):
    graph: Graph
    landmarks: LandmarkSet
    k: int
    variant: str
    strict: bool
    metric: LandmarkMetric
    balls: list[BallInfo] | None = None
    vicinities: list[VicinityInfo] | None = None
    seed: int = 0

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def nearest(self) -> np.ndarray:
        return self.metric.nearest

    @property
    def radius(self) -> np.ndarray:
        return self.metric.radius

    @property
    def sub(self) -> TZOracle:
        return self.metric.sub

    @property
    def size_entries(self) -> int:
        size = 2 * self.graph.m + 2 * self.n + self.sub.size_entries
        if self.balls is not None:
            size += sum(len(b.ball) for b in self.balls)
        if self.vicinities is not None:
            size += sum(len(x.vicinity) for x in self.vicinities)
        return size

    @property
    def path_support_entries(self) -> int:
        return self.metric.support_entries

    def index(self) -> NodeIndex:
        if self.balls is not None and self.vicinities is not None:
            return NodeIndex.from_tables(self.balls, self.vicinities)
        return NodeIndex.from_graph(self.graph, self.landmarks.members)


def size_bound(g: Graph, alpha: float, k: int, variant: str, constant: float = SIZE_CONSTANT) -> float:
    n, delta = g.n, g.avg_degree
    head = n * delta * (alpha if variant == "stored" else 1.0)
    return constant * (head + (n / alpha) ** (1.0 + 1.0 / k))


def build_mult(
    g: Graph,
    alpha: float,
    k: int,
    variant: str = "onfly",
    seed: int = 0,
    *,
    sampling: str = "degree",
    landmarks: LandmarkSet | None = None,
    strict: bool = False,
    size_constant: float | None = SIZE_CONSTANT,
    max_attempts: int = 8,
    context: LandmarkContext | None = None,
) -> MultOracle:
    require_connected(g)
    if k < 1:
        raise BuildError("k must be >= 1")
    if variant not in ("onfly", "stored"):
        raise ValueError(f"unknown variant {variant!r}")

    def assemble(L: LandmarkSet, a: int) -> MultOracle:
        balls = vics = None
        if variant == "stored":
            ctx = context
            if ctx is None or ctx.landmarks.members != L.members or ctx.vicinities is None:
                ctx = LandmarkContext.build(g, L, with_vicinities=True)
            balls, vics = ctx.balls, ctx.vicinities
        return MultOracle(g, L, k, variant, strict, build_landmark_metric(g, L, k, seed, a), balls, vics, seed)

    if landmarks is not None:
        return assemble(landmarks, 0)
    if not 1 <= alpha <= g.n:
        raise BuildError(f"alpha={alpha} outside [1, n]")
    bound = math.inf if size_constant is None else size_bound(g, alpha, k, variant, size_constant)
    return las_vegas_build(lambda a: assemble(sample_landmarks(g, sampling, alpha, seed, attempt=a), a), bound, max_attempts)


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------


def _fallback(o: MultOracle, u: int, v: int) -> float:
    lu, lv = int(o.nearest[u]), int(o.nearest[v])
    return float(o.radius[u]) + o.metric.estimate(lu, lv) + float(o.radius[v])


def query_mult(o: MultOracle, u: int, v: int, *, intersection: str = "ball", with_path: bool = False) -> QueryResult:
    if u == v:
        qr = QueryResult(0.0, Branch.DIRECT, None, 0)
    else:
        bu, gu = o.endpoint(u)
        bv, gv = o.endpoint(v)
        d, probes = direct_lookup(u, v, gu, gv)
        if d is not None:
            qr = QueryResult(d, Branch.DIRECT, None, probes)
        else:
            hit, spent = intersect(bu, gu, bv, gv, o.strict, intersection)
            probes += spent
            fb = _fallback(o, u, v)
            cbranch = Branch.VICINITY if intersection == "vicinity" else Branch.BALL
            if hit is not None and (o.strict or hit[1] <= fb):
                qr = QueryResult(hit[1], cbranch, hit[0], probes)
            else:
                qr = QueryResult(fb, Branch.TZ, int(o.nearest[u]), probes)
    if with_path:
        qr = QueryResult(qr.estimate, qr.branch, qr.via, qr.probes, retrieve_path_mult(o, qr, u, v))
    return qr


def query_mult_optimized(o: MultOracle, u: int, v: int, *, with_path: bool = False) -> QueryResult:
    """Also try every ``w ∈ B(u)`` as a detour ``u -> w -> l(w) ~> l(v) -> v``."""
    qr = query_mult(o, u, v)
    if u != v:
        bu, _ = o.endpoint(u)
        lv = int(o.nearest[v])
        rv = float(o.radius[v])
        best_s, best_w = math.inf, -1
        for w, (dw, _) in bu.ball.items():
            s = dw + float(o.radius[w]) + o.metric.estimate(int(o.nearest[w]), lv) + rv
            if s < best_s or (s == best_s and w < best_w):
                best_s, best_w = s, w
        probes = qr.probes + len(bu.ball)
        if best_s < qr.estimate:
            qr = QueryResult(best_s, Branch.SHORTCUT, best_w, probes)
        else:
            qr = QueryResult(qr.estimate, qr.branch, qr.via, probes)
    if with_path:
        qr = QueryResult(qr.estimate, qr.branch, qr.via, qr.probes, retrieve_path_mult(o, qr, u, v))
    return qr


def landmark_route(m: LandmarkMetric, x: int, y: int) -> list[int]:
    """``x -> l(x) ~> l(y) -> y`` with the middle expanded through leg tables."""
    head = m.to_landmark(x)
    tail = m.to_landmark(y)[::-1]
    return join(head, m.route(head[-1], tail[0]), tail)


def retrieve_path_mult(o: MultOracle, qr: QueryResult, u: int, v: int) -> list[int]:
    if u == v:
        return [u]
    b = qr.branch
    if b is Branch.DIRECT:
        _, gu = o.endpoint(u)
        if v in gu.vicinity:
            return gu.path_from_node(v)
        _, gv = o.endpoint(v)
        return gv.path_from_node(u)[::-1]
    if b in (Branch.BALL, Branch.VICINITY):
        return meeting_path(o.endpoint(u)[1], o.endpoint(v)[1], qr.via)
    if b is Branch.TZ:
        return landmark_route(o.metric, u, v)
    if b is Branch.SHORTCUT:
        bu, _ = o.endpoint(u)
        return join(bu.path_from_node(qr.via), landmark_route(o.metric, qr.via, v))
    raise ValueError(f"branch {b} does not belong to this oracle")


# ---------------------------------------------------------------------------
# row evaluation
# ---------------------------------------------------------------------------


def query_mult_row(o: MultOracle, u: int, index: NodeIndex, *, intersection: str = "ball") -> Row:
    n = o.n
    row, pending = start_row(n, u)
    direct_row(index, u, row, pending)
    cand, cvia = intersect_row(index, u, row, pending, o.strict, intersection)
    dense = o.metric.dense(np.arange(n))
    fb = (o.radius[u] + o.metric.matrix()[dense[u], dense]) + o.radius
    cbranch = Branch.VICINITY if intersection == "vicinity" else Branch.BALL
    return finish_row(row, pending, cand, cvia, cbranch, fb, int(o.nearest[u]), Branch.TZ, o.strict)


def query_mult_optimized_row(o: MultOracle, u: int, index: NodeIndex, plain: Row | None = None) -> Row:
    row = plain if plain is not None else query_mult_row(o, u, index)
    row = Row(u, row.estimate.copy(), row.branch.copy(), row.via.copy(), row.probes.copy())
    bi, bd = index.ball.row(u)
    n = o.n
    dense = o.metric.dense(np.arange(n))
    mat = o.metric.matrix()
    best = np.full(n, math.inf)
    arg = np.full(n, -1, dtype=np.int64)
    if bi.size:
        base = bd + o.radius[bi]
        block = (base[:, None] + mat[dense[bi]][:, dense]) + o.radius[None, :]
        a = np.argmin(block, axis=0)
        best = block[a, np.arange(n)]
        arg = bi[a]
    others = np.ones(n, dtype=bool)
    others[u] = False
    row.probes[others] += bi.size
    win = others & (best < row.estimate)
    row.estimate[win] = best[win]
    row.branch[win] = Branch.SHORTCUT.code
    row.via[win] = arg[win]
    return row
