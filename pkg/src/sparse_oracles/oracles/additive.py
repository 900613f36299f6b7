"""Additive-stretch oracles built from stored balls only.

The query intersects ``B(u)`` with ``B(v)`` instead of a vicinity, so no
vicinity is ever computed or stored. ``two_plus`` falls back to full landmark
tables (``2d + w`` with ``w`` the heaviest edge on a shortest path);
``fourk_plus`` falls back to the hierarchical oracle over the landmark metric
(``(4k-1)d + 2k·w``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..graph import Graph
from ..landmarks import (
    BallInfo,
    BuildError,
    LandmarkContext,
    LandmarkSet,
    best_common,
    las_vegas_build,
    require_connected,
    sample_landmarks,
)
from .common import Branch, NodeIndex, QueryResult, Row, finish_row, join, meeting_path, min_plus, settle, start_row, tree_path
from .mult import LandmarkMetric, build_landmark_metric, landmark_route
from .stretch2 import landmark_tables

MODES = ("two_plus", "fourk_plus")
SIZE_CONSTANT = 4.0


@dataclass
class AdditiveOracle:
    n: int
    landmarks: LandmarkSet
    mode: str
    k: int
    balls: list[BallInfo]
    nearest: np.ndarray
    radius: np.ndarray
    table: np.ndarray | None = None
    table_parent: np.ndarray | None = None
    metric: LandmarkMetric | None = None
    seed: int = 0
    lindex: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.lindex = {int(l): i for i, l in enumerate(self.landmarks.ids)}

    @property
    def size_entries(self) -> int:
        size = sum(len(b.ball) for b in self.balls) + 2 * self.n
        if self.mode == "two_plus":
            return size + self.table.size
        return size + self.metric.sub.size_entries

    def landmark_distance(self, l: int, x: int) -> float:
        return float(self.table[self.lindex[l], x])

    def landmark_path(self, l: int, x: int) -> list[int]:
        return tree_path(self.table_parent[self.lindex[l]], l, x)

    def index(self) -> NodeIndex:
        return NodeIndex.from_tables(self.balls, None)


def size_bound(n: int, alpha: float, mode: str, k: int, constant: float = SIZE_CONSTANT) -> float:
    tail = n * n / alpha if mode == "two_plus" else (n / alpha) ** (1.0 + 1.0 / k)
    return constant * (n * alpha + tail)


def build_additive(
    g: Graph,
    alpha: float,
    mode: str = "two_plus",
    seed: int = 0,
    *,
    k: int = 1,
    sampling: str = "uniform",
    landmarks: LandmarkSet | None = None,
    size_constant: float | None = SIZE_CONSTANT,
    max_attempts: int = 8,
    context: LandmarkContext | None = None,
) -> AdditiveOracle:
    require_connected(g)
    if mode not in MODES:
        raise ValueError(f"unknown additive mode {mode!r}")
    if k < 1:
        raise BuildError("k must be >= 1")

    def assemble(L: LandmarkSet, a: int) -> AdditiveOracle:
        ctx = context
        if ctx is None or ctx.landmarks.members != L.members:
            ctx = LandmarkContext.build(g, L, with_vicinities=False)
        if mode == "two_plus":
            table, parent, nearest, radius = landmark_tables(g, L.ids)
            return AdditiveOracle(g.n, L, mode, k, ctx.balls, nearest, radius, table, parent, None, seed)
        metric = build_landmark_metric(g, L, k, seed, a)
        return AdditiveOracle(g.n, L, mode, k, ctx.balls, metric.nearest, metric.radius, None, None, metric, seed)

    if landmarks is not None:
        return assemble(landmarks, 0)
    if not 1 <= alpha <= g.n:
        raise BuildError(f"alpha={alpha} outside [1, n]")
    bound = math.inf if size_constant is None else size_bound(g.n, alpha, mode, k, size_constant)
    return las_vegas_build(lambda a: assemble(sample_landmarks(g, sampling, alpha, seed, attempt=a), a), bound, max_attempts)


def _fallback(o: AdditiveOracle, u: int, v: int) -> tuple[float, Branch, int]:
    ru, rv = float(o.radius[u]), float(o.radius[v])
    lu, lv = int(o.nearest[u]), int(o.nearest[v])
    if o.mode == "fourk_plus":
        return ru + o.metric.estimate(lu, lv) + rv, Branch.TZ, lu
    if ru <= rv:
        return ru + o.landmark_distance(lu, v), Branch.LANDMARK_U, lu
    return rv + o.landmark_distance(lv, u), Branch.LANDMARK_V, lv


def query_additive(o: AdditiveOracle, u: int, v: int, *, with_path: bool = False) -> QueryResult:
    if u == v:
        qr = QueryResult(0.0, Branch.DIRECT_BALL, None, 0)
    else:
        qr = _query(o, u, v)
    if with_path:
        qr = QueryResult(qr.estimate, qr.branch, qr.via, qr.probes, retrieve_path_additive(o, qr, u, v))
    return qr


def _query(o: AdditiveOracle, u: int, v: int) -> QueryResult:
    bu, bv = o.balls[u], o.balls[v]
    e = bu.ball.get(v)
    if e is not None:
        return QueryResult(e[0], Branch.DIRECT_BALL, None, 1)
    e = bv.ball.get(u)
    if e is not None:
        return QueryResult(e[0], Branch.DIRECT_BALL, None, 2)
    hit = best_common(bu.ball, bv.ball)
    probes = 2 + len(bu.ball)
    if hit is not None:
        return QueryResult(hit[1], Branch.BALL_BALL, hit[0], probes)
    fb, branch, via = _fallback(o, u, v)
    return QueryResult(fb, branch, via, probes)


def retrieve_path_additive(o: AdditiveOracle, qr: QueryResult, u: int, v: int) -> list[int]:
    if u == v:
        return [u]
    bu, bv = o.balls[u], o.balls[v]
    b = qr.branch
    if b is Branch.DIRECT_BALL:
        return bu.path_from_node(v) if v in bu.ball else bv.path_from_node(u)[::-1]
    if b is Branch.BALL_BALL:
        return meeting_path(bu, bv, qr.via)
    if b in (Branch.LANDMARK_U, Branch.LANDMARK_V):
        return join(o.landmark_path(qr.via, u)[::-1], o.landmark_path(qr.via, v))
    if b is Branch.TZ:
        return landmark_route(o.metric, u, v)
    raise ValueError(f"branch {b} does not belong to this oracle")


def query_additive_row(o: AdditiveOracle, u: int, index: NodeIndex) -> Row:
    n = o.n
    row, pending = start_row(n, u)
    row.branch[u] = Branch.DIRECT_BALL.code
    bi, bd = index.ball.row(u)
    row.probes[pending] += 1
    est = np.full(n, np.nan)
    est[bi] = bd
    mask = np.zeros(n, dtype=bool)
    mask[bi] = True
    settle(row, pending, mask, est, Branch.DIRECT_BALL)
    row.probes[pending] += 1
    oi, od = index.inv_ball.row(u)
    est = np.full(n, np.nan)
    est[oi] = od
    mask = np.zeros(n, dtype=bool)
    mask[oi] = True
    settle(row, pending, mask, est, Branch.DIRECT_BALL)
    row.probes[pending] += bi.size
    cand, cvia = min_plus(bi, bd, index.inv_ball)
    ru = o.radius[u]
    lu = int(o.nearest[u])
    if o.mode == "fourk_plus":
        dense = o.metric.dense(np.arange(n))
        fb = (ru + o.metric.matrix()[dense[u], dense]) + o.radius
        return finish_row(row, pending, cand, cvia, Branch.BALL_BALL, fb, lu, Branch.TZ, True)
    lrow = np.array([o.lindex[int(x)] for x in o.nearest], dtype=np.int64)
    use_u = ru <= o.radius
    fb = np.where(use_u, ru + o.table[o.lindex[lu]], o.radius + o.table[:, u][lrow])
    fvia = np.where(use_u, lu, o.nearest)
    fbranch = np.where(use_u, Branch.LANDMARK_U.code, Branch.LANDMARK_V.code).astype(np.int8)
    return finish_row(row, pending, cand, cvia, Branch.BALL_BALL, fb, fvia, fbranch, True)
