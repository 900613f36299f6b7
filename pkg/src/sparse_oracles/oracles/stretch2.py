"""Stretch-2 oracle: full landmark tables plus ball/vicinity intersection.

Every landmark stores its distance to every node. A query first looks for
the pair inside either endpoint's vicinity, then for a node of ``B(u)`` lying
in ``Γ(v)``, and otherwise routes through the nearest landmark of the endpoint
with the smaller ball radius.

By default the scan is made symmetric (``B(v)`` against ``Γ(u)`` when the first
scan is empty) and the landmark route is always a candidate: on weighted
graphs an intersection node can be farther than the landmark detour once
``d(u, v) >= r_u + r_v``. ``strict=True`` answers with the first non-empty
intersection unconditionally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..graph import Graph, dijkstra
from ..landmarks import (
    BallInfo,
    BuildError,
    LandmarkContext,
    LandmarkSet,
    VicinityInfo,
    las_vegas_build,
    nearest_landmarks,
    require_connected,
    sample_landmarks,
)
from .common import (
    Branch,
    NodeIndex,
    QueryResult,
    Row,
    VicinityOracleMixin,
    dense_min_plus,
    direct_lookup,
    direct_row,
    finish_row,
    intersect,
    intersect_row,
    join,
    meeting_path,
    settle,
    start_row,
    tree_path,
)

SIZE_CONSTANT = 4.0


@dataclass
class Stretch2Oracle(VicinityOracleMixin):
    graph: Graph
    landmarks: LandmarkSet
    variant: str
    strict: bool
    landmark_ids: np.ndarray
    table: np.ndarray  # (|L|, n) distances from each landmark
    table_parent: np.ndarray  # (|L|, n) shortest-path tree parents
    nearest: np.ndarray
    radius: np.ndarray
    balls: list[BallInfo] | None = None
    vicinities: list[VicinityInfo] | None = None
    seed: int = 0
    lindex: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.lindex = {int(l): i for i, l in enumerate(self.landmark_ids)}

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def size_entries(self) -> int:
        """Adjacency, landmark tables, ``l``/``r`` per node and any stored balls and vicinities."""
        size = 2 * self.graph.m + self.table.size + 2 * self.n
        if self.balls is not None:
            size += sum(len(b.ball) for b in self.balls)
        if self.vicinities is not None:
            size += sum(len(x.vicinity) for x in self.vicinities)
        return size

    def landmark_distance(self, l: int, x: int) -> float:
        return float(self.table[self.lindex[l], x])

    def landmark_path(self, l: int, x: int) -> list[int]:
        """Tree path ``l -> x`` from the landmark's table."""
        return tree_path(self.table_parent[self.lindex[l]], l, x)

    def index(self) -> NodeIndex:
        if self.balls is not None and self.vicinities is not None:
            return NodeIndex.from_tables(self.balls, self.vicinities)
        return NodeIndex.from_graph(self.graph, self.landmarks.members)


def size_bound(g: Graph, alpha: float, variant: str, constant: float = SIZE_CONSTANT) -> float:
    n, delta = g.n, g.avg_degree
    if variant == "stored":
        return constant * (n * delta * alpha + n * n / alpha)
    return constant * (n * delta + n * n / alpha)


def landmark_tables(g: Graph, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One search per landmark: ``(table, parents, nearest, radius)``."""
    tables = [dijkstra(g, int(l)) for l in ids]
    table = np.array([t.dist for t in tables], dtype=np.float64).reshape(len(ids), g.n)
    parent = np.array([t.parent for t in tables], dtype=np.int64).reshape(len(ids), g.n)
    nearest, radius = nearest_landmarks(table, ids)
    nearest[ids] = ids
    radius[ids] = 0.0
    return table, parent, nearest, radius


def _assemble(g: Graph, L: LandmarkSet, variant: str, strict: bool, seed: int, context: LandmarkContext | None):
    ids = L.ids
    table, parent, nearest, radius = landmark_tables(g, ids)
    balls = vics = None
    if variant == "stored":
        if context is None or context.landmarks.members != L.members or context.vicinities is None:
            context = LandmarkContext.build(g, L, with_vicinities=True)
        balls, vics = context.balls, context.vicinities
    elif variant != "onfly":
        raise ValueError(f"unknown variant {variant!r}")
    return Stretch2Oracle(g, L, variant, strict, ids, table, parent, nearest, radius, balls, vics, seed)


def build_stretch2(
    g: Graph,
    alpha: float,
    variant: str = "onfly",
    seed: int = 0,
    *,
    sampling: str = "degree",
    landmarks: LandmarkSet | None = None,
    strict: bool = False,
    size_constant: float | None = SIZE_CONSTANT,
    max_attempts: int = 8,
    context: LandmarkContext | None = None,
) -> Stretch2Oracle:
    """Build the oracle; sampled landmark sets are redrawn until the size bound holds.

    A caller-supplied ``landmarks`` set is used as is, without a size bound.
    """
    require_connected(g)
    if landmarks is not None:
        return _assemble(g, landmarks, variant, strict, seed, context)
    if not 1 <= alpha <= g.n:
        raise BuildError(f"alpha={alpha} outside [1, n]")
    bound = math.inf if size_constant is None else size_bound(g, alpha, variant, size_constant)

    def attempt(a: int) -> Stretch2Oracle:
        L = sample_landmarks(g, sampling, alpha, seed, attempt=a)
        return _assemble(g, L, variant, strict, seed, context)

    return las_vegas_build(attempt, bound, max_attempts)


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------


def _fallback(o: Stretch2Oracle, u: int, v: int) -> tuple[float, Branch, int]:
    ru, rv = float(o.radius[u]), float(o.radius[v])
    if ru <= rv:
        l = int(o.nearest[u])
        return ru + o.landmark_distance(l, v), Branch.LANDMARK_U, l
    l = int(o.nearest[v])
    return rv + o.landmark_distance(l, u), Branch.LANDMARK_V, l


def query2(
    o: Stretch2Oracle, u: int, v: int, *, intersection: str = "ball", with_path: bool = False
) -> QueryResult:
    if u == v:
        qr = QueryResult(0.0, Branch.DIRECT, None, 0)
    else:
        qr = _query2(o, u, v, intersection)
    if with_path:
        qr = QueryResult(qr.estimate, qr.branch, qr.via, qr.probes, retrieve_path2(o, qr, u, v))
    return qr


def _query2(o: Stretch2Oracle, u: int, v: int, intersection: str) -> QueryResult:
    bu, gu = o.endpoint(u)
    bv, gv = o.endpoint(v)
    d, probes = direct_lookup(u, v, gu, gv)
    if d is not None:
        return QueryResult(d, Branch.DIRECT, None, probes)
    if u in o.landmarks:
        return QueryResult(o.landmark_distance(u, v), Branch.LANDMARK_U, u, probes)
    if v in o.landmarks:
        return QueryResult(o.landmark_distance(v, u), Branch.LANDMARK_V, v, probes)
    hit, spent = intersect(bu, gu, bv, gv, o.strict, intersection)
    probes += spent
    cbranch = Branch.VICINITY if intersection == "vicinity" else Branch.BALL
    fb, fbranch, fvia = _fallback(o, u, v)
    if hit is not None and (o.strict or hit[1] <= fb):
        return QueryResult(hit[1], cbranch, hit[0], probes)
    return QueryResult(fb, fbranch, fvia, probes)


def query2_optimized(o: Stretch2Oracle, u: int, v: int, *, with_path: bool = False) -> QueryResult:
    """Also try every ``w ∈ Γ(u)`` as a detour ``u -> w -> l(w) -> v``."""
    qr = query2(o, u, v)
    if u != v:
        _, gu = o.endpoint(u)
        best_s, best_w = math.inf, -1
        for w, (dw, _) in gu.vicinity.items():
            s = dw + float(o.radius[w]) + o.landmark_distance(int(o.nearest[w]), v)
            if s < best_s or (s == best_s and w < best_w):
                best_s, best_w = s, w
        probes = qr.probes + len(gu.vicinity)
        if best_s < qr.estimate:
            qr = QueryResult(best_s, Branch.SHORTCUT, best_w, probes)
        else:
            qr = QueryResult(qr.estimate, qr.branch, qr.via, probes)
    if with_path:
        qr = QueryResult(qr.estimate, qr.branch, qr.via, qr.probes, retrieve_path2(o, qr, u, v))
    return qr


def retrieve_path2(o: Stretch2Oracle, qr: QueryResult, u: int, v: int) -> list[int]:
    """Walk whose weight is ``qr.estimate``; it may revisit nodes where legs meet."""
    if u == v:
        return [u]
    b = qr.branch
    if b is Branch.DIRECT:
        _, gu = o.endpoint(u)
        if v in gu.vicinity:
            return gu.path_from_node(v)
        _, gv = o.endpoint(v)
        return gv.path_from_node(u)[::-1]
    if b is Branch.LANDMARK_U:
        l = qr.via
        return join(o.landmark_path(l, u)[::-1], o.landmark_path(l, v))
    if b is Branch.LANDMARK_V:
        l = qr.via
        return join(o.landmark_path(l, u)[::-1], o.landmark_path(l, v))
    if b in (Branch.BALL, Branch.VICINITY):
        _, gu = o.endpoint(u)
        _, gv = o.endpoint(v)
        return meeting_path(gu, gv, qr.via)
    if b is Branch.SHORTCUT:
        w = qr.via
        _, gu = o.endpoint(u)
        l = int(o.nearest[w])
        return join(gu.path_from_node(w), o.landmark_path(l, w)[::-1], o.landmark_path(l, v))
    raise ValueError(f"branch {b} does not belong to this oracle")


# ---------------------------------------------------------------------------
# row evaluation
# ---------------------------------------------------------------------------


def query2_row(o: Stretch2Oracle, u: int, index: NodeIndex, *, intersection: str = "ball") -> Row:
    """``query2(o, u, v)`` for every ``v`` (estimates, branches, vias and probes agree exactly)."""
    n = o.n
    row, pending = start_row(n, u)
    direct_row(index, u, row, pending)
    if u in o.landmarks:
        settle(row, pending, np.ones(n, dtype=bool), o.table[o.lindex[u]], Branch.LANDMARK_U, u)
        return row
    is_l = np.zeros(n, dtype=bool)
    is_l[o.landmark_ids] = True
    col = o.table[:, u]
    lrow = np.array([o.lindex.get(int(x), 0) for x in o.nearest], dtype=np.int64)
    settle(row, pending, is_l, col[lrow], Branch.LANDMARK_V, np.arange(n))
    cand, cvia = intersect_row(index, u, row, pending, o.strict, intersection)
    ru = o.radius[u]
    use_u = ru <= o.radius
    fb = np.where(use_u, ru + o.table[o.lindex[int(o.nearest[u])]], o.radius + col[lrow])
    fvia = np.where(use_u, o.nearest[u], o.nearest)
    fbranch = np.where(use_u, Branch.LANDMARK_U.code, Branch.LANDMARK_V.code).astype(np.int8)
    cbranch = Branch.VICINITY if intersection == "vicinity" else Branch.BALL
    return finish_row(row, pending, cand, cvia, cbranch, fb, fvia, fbranch, o.strict)


def shortcut_rows(o: Stretch2Oracle, u: int, index: NodeIndex, order: np.ndarray | None = None):
    """Detour lengths ``d(u,w) + r_w + d(l(w), v)`` for ``w ∈ Γ(u)``, one row per ``w``.

    Returns ``(ws, base, rows)`` so that ``base[j] + rows[j]`` is the detour
    through ``ws[j]``; ``order`` permutes the members first (probe orders).
    """
    gi, gd = index.vic.row(u)
    if order is not None:
        gi, gd = gi[order], gd[order]
    base = gd + o.radius[gi]
    lrow = np.array([o.lindex[int(o.nearest[w])] for w in gi], dtype=np.int64)
    return gi, base, o.table[lrow] if gi.size else np.zeros((0, o.n))


def query2_optimized_row(o: Stretch2Oracle, u: int, index: NodeIndex, plain: Row | None = None) -> Row:
    row = plain if plain is not None else query2_row(o, u, index)
    row = Row(u, row.estimate.copy(), row.branch.copy(), row.via.copy(), row.probes.copy())
    ws, base, rows = shortcut_rows(o, u, index)
    best, arg = dense_min_plus(ws, base, rows)
    others = np.ones(o.n, dtype=bool)
    others[u] = False
    row.probes[others] += ws.size
    win = others & (best < row.estimate)
    row.estimate[win] = best[win]
    row.branch[win] = Branch.SHORTCUT.code
    row.via[win] = arg[win]
    return row
