"""Pieces shared by the landmark oracles: results, branch codes, row evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ..landmarks import BallInfo, VicinityInfo, best_common, grow_tables
from ..graph import Graph


class Branch(str, Enum):
    DIRECT = "direct_vicinity"
    BALL = "ball_vicinity"
    LANDMARK_U = "landmark_u"
    LANDMARK_V = "landmark_v"
    SHORTCUT = "optimized_shortcut"
    TZ = "tz_fallback"
    DIRECT_BALL = "direct_ball"
    BALL_BALL = "ball_ball"
    VICINITY = "vicinity_vicinity"

    @property
    def code(self) -> int:
        return BRANCHES.index(self)


BRANCHES = list(Branch)
EXACT_BRANCHES = (Branch.DIRECT, Branch.DIRECT_BALL)


@dataclass(frozen=True)
class QueryResult:
    estimate: float
    branch: Branch
    via: int | None
    probes: int
    path: list[int] | None = None

    def csv_row(self, u: int, v: int) -> str:
        via = "" if self.via is None else str(self.via)
        return f"{u},{v},{self.estimate!r},{self.branch.value},{via},{self.probes}"


QUERY_CSV_HEADER = "u,v,estimate,branch,via,probes"


def simplify_walk(path: Sequence[int]) -> list[int]:
    """Cut every loop out of a walk by splicing at repeated nodes."""
    out: list[int] = []
    pos: dict[int, int] = {}
    for x in path:
        if x in pos:
            cut = pos[x]
            for y in out[cut + 1 :]:
                del pos[y]
            del out[cut + 1 :]
        else:
            pos[x] = len(out)
            out.append(x)
    return out


def join(*legs: Sequence[int]) -> list[int]:
    """Concatenate walks whose consecutive endpoints coincide."""
    out: list[int] = list(legs[0])
    for leg in legs[1:]:
        if out[-1] != leg[0]:
            raise ValueError("legs do not meet")
        out.extend(leg[1:])
    return out


def tree_path(parent, root: int, x: int) -> list[int]:
    """Path ``root -> x`` following ``parent`` pointers (array or mapping)."""
    out = [x]
    while x != root:
        x = int(parent[x])
        out.append(x)
    out.reverse()
    return out


class VicinityOracleMixin:
    """Endpoint tables for oracles that keep the graph and may store vicinities."""

    graph: Graph
    balls: list[BallInfo] | None
    vicinities: list[VicinityInfo] | None

    def endpoint(self, x: int) -> tuple[BallInfo, VicinityInfo]:
        if self.balls is not None and self.vicinities is not None:
            return self.balls[x], self.vicinities[x]
        ball, vic = grow_tables(self.graph, x, self.landmarks.members, True)  # type: ignore[attr-defined]
        return ball, vic  # type: ignore[return-value]


def direct_lookup(u: int, v: int, gu: VicinityInfo, gv: VicinityInfo) -> tuple[float | None, int]:
    """Exact distance when ``v ∈ Γ(u)`` or ``u ∈ Γ(v)``; one probe per non-empty table."""
    probes = 0
    if gu.vicinity:
        probes += 1
        e = gu.vicinity.get(v)
        if e is not None:
            return e[0], probes
    if gv.vicinity:
        probes += 1
        e = gv.vicinity.get(u)
        if e is not None:
            return e[0], probes
    return None, probes


def intersect(
    bu: BallInfo, gu: VicinityInfo, bv: BallInfo, gv: VicinityInfo, strict: bool, mode: str = "ball"
) -> tuple[tuple[int, float] | None, int]:
    """Best meeting node of the two endpoint tables and the probes spent.

    ``ball`` mode scans ``B(u)`` against ``Γ(v)`` and, unless ``strict``,
    ``B(v)`` against ``Γ(u)`` when the first scan finds nothing. ``vicinity``
    mode scans ``Γ(u)`` against ``Γ(v)``.
    """
    if mode == "vicinity":
        hit = best_common(gu.vicinity, gv.vicinity)
        return (None if hit is None else hit[:2]), len(gu.vicinity)
    hit = best_common(bu.ball, gv.vicinity)
    probes = len(bu.ball)
    if hit is None and not strict:
        hit = best_common(bv.ball, gu.vicinity)
        probes += len(bv.ball)
    return (None if hit is None else hit[:2]), probes


def meeting_path(u_tree: VicinityInfo | BallInfo, v_tree: VicinityInfo | BallInfo, w: int) -> list[int]:
    return join(u_tree.path_from_node(w), v_tree.path_from_node(w)[::-1])


# ---------------------------------------------------------------------------
# row evaluation: one source against every destination, vectorised
# ---------------------------------------------------------------------------


class SparseRows:
    """CSR rows of ``(node, distance)`` sorted by node id, plus the transpose."""

    def __init__(self, n: int, ptr: np.ndarray, idx: np.ndarray, dist: np.ndarray) -> None:
        self.n = n
        self.ptr = ptr
        self.idx = idx
        self.dist = dist

    @classmethod
    def from_maps(cls, n: int, maps: Sequence[dict[int, tuple[float, int]]]) -> "SparseRows":
        sizes = np.fromiter((len(m) for m in maps), dtype=np.int64, count=n)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(sizes, out=ptr[1:])
        idx = np.empty(ptr[-1], dtype=np.int64)
        dist = np.empty(ptr[-1])
        for v, m in enumerate(maps):
            if m:
                keys = sorted(m)
                s = ptr[v]
                idx[s : s + len(keys)] = keys
                dist[s : s + len(keys)] = [m[k][0] for k in keys]
        return cls(n, ptr, idx, dist)

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.ptr)

    def row(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.ptr[v], self.ptr[v + 1]
        return self.idx[s:e], self.dist[s:e]

    def transpose(self) -> "SparseRows":
        owners = np.repeat(np.arange(self.n, dtype=np.int64), self.sizes)
        order = np.lexsort((owners, self.idx))
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.idx, minlength=self.n), out=ptr[1:])
        return SparseRows(self.n, ptr, owners[order], self.dist[order])


class NodeIndex:
    """Balls and vicinities of all nodes in array form, with inverted indices.

    ``inv_vic.row(w)`` lists every ``v`` with ``w ∈ Γ(v)`` together with
    ``d(v, w)``; ``inv_ball`` does the same for balls.
    """

    def __init__(self, n: int, ball: SparseRows, vic: SparseRows | None) -> None:
        self.n = n
        self.ball = ball
        self.vic = vic
        self.inv_ball = ball.transpose()
        self.inv_vic = vic.transpose() if vic is not None else None

    @classmethod
    def from_tables(cls, balls: Sequence[BallInfo], vicinities: Sequence[VicinityInfo] | None) -> "NodeIndex":
        n = len(balls)
        ball = SparseRows.from_maps(n, [b.ball for b in balls])
        vic = SparseRows.from_maps(n, [x.vicinity for x in vicinities]) if vicinities is not None else None
        return cls(n, ball, vic)

    @classmethod
    def from_graph(cls, g: Graph, members: frozenset[int], with_vicinities: bool = True) -> "NodeIndex":
        """Run every node's search once, keeping only arrays (no per-node dicts)."""
        n = g.n
        balls: list[SparseRows] = []
        vics: list[SparseRows] = []
        buf_b: list[dict] = []
        buf_v: list[dict] = []
        for x in range(n):
            ball, vic = grow_tables(g, x, members, with_vicinities)
            buf_b.append(ball.ball)
            if vic is not None:
                buf_v.append(vic.vicinity)
            if len(buf_b) == 256 or x == n - 1:
                balls.append(SparseRows.from_maps(len(buf_b), buf_b))
                if with_vicinities:
                    vics.append(SparseRows.from_maps(len(buf_v), buf_v))
                buf_b, buf_v = [], []
        return cls(n, _stack(n, balls), _stack(n, vics) if with_vicinities else None)


def _stack(n: int, parts: list[SparseRows]) -> SparseRows:
    if not parts:
        return SparseRows(n, np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))
    sizes = np.concatenate([p.sizes for p in parts])
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=ptr[1:])
    return SparseRows(n, ptr, np.concatenate([p.idx for p in parts]), np.concatenate([p.dist for p in parts]))


BLOCK_ELEMENTS = 1 << 22


def min_plus(ws: np.ndarray, dws: np.ndarray, inv: SparseRows) -> tuple[np.ndarray, np.ndarray]:
    """For every ``v``: ``min_j dws[j] + d(v, ws[j])`` over ``v`` listed in ``inv.row(ws[j])``.

    ``ws`` must be ascending so that ties resolve to the lowest ``w``.
    Returns ``(best, argbest)`` with ``inf`` / ``-1`` where nothing matched.
    """
    n = inv.n
    best = np.full(n, math.inf)
    arg = np.full(n, -1, dtype=np.int64)
    if ws.size == 0:
        return best, arg
    step = max(1, BLOCK_ELEMENTS // max(n, 1))
    for lo in range(0, ws.size, step):
        chunk = ws[lo : lo + step]
        starts = inv.ptr[chunk]
        lens = inv.ptr[chunk + 1] - starts
        rows = np.repeat(np.arange(chunk.size), lens)
        offsets = np.cumsum(lens) - lens
        pos = np.repeat(starts - offsets, lens) + np.arange(rows.size)
        block = np.full((chunk.size, n), math.inf)
        block[rows, inv.idx[pos]] = dws[lo : lo + step][rows] + inv.dist[pos]
        a = np.argmin(block, axis=0)
        m = block[a, np.arange(n)]
        better = m < best
        best[better] = m[better]
        arg[better] = chunk[a[better]]
    return best, arg


def dense_min_plus(ws: np.ndarray, base: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``min_j base[j] + rows[j, :]`` with lowest-``w`` ties; ``rows`` is aligned with ``ws``."""
    n = rows.shape[1] if rows.ndim == 2 else 0
    best = np.full(n, math.inf)
    arg = np.full(n, -1, dtype=np.int64)
    step = max(1, BLOCK_ELEMENTS // max(n, 1))
    for lo in range(0, ws.size, step):
        block = base[lo : lo + step, None] + rows[lo : lo + step]
        a = np.argmin(block, axis=0)
        m = block[a, np.arange(n)]
        better = m < best
        best[better] = m[better]
        arg[better] = ws[lo : lo + step][a[better]]
    return best, arg


@dataclass
class Row:
    """Query results from one source to every node (``via = -1`` means none)."""

    source: int
    estimate: np.ndarray
    branch: np.ndarray
    via: np.ndarray
    probes: np.ndarray

    def result(self, v: int) -> QueryResult:
        via = int(self.via[v])
        return QueryResult(float(self.estimate[v]), BRANCHES[int(self.branch[v])], None if via < 0 else via, int(self.probes[v]))


def start_row(n: int, u: int) -> tuple[Row, np.ndarray]:
    row = Row(u, np.full(n, np.nan), np.full(n, -1, dtype=np.int8), np.full(n, -1, dtype=np.int64), np.zeros(n, dtype=np.int64))
    row.estimate[u] = 0.0
    row.branch[u] = Branch.DIRECT.code
    pending = np.ones(n, dtype=bool)
    pending[u] = False
    return row, pending


def settle(row: Row, pending: np.ndarray, mask: np.ndarray, est, branch: Branch | np.ndarray, via=-1) -> None:
    """Fill pending entries selected by ``mask`` and mark them answered."""
    sel = pending & mask
    row.estimate[sel] = est[sel] if isinstance(est, np.ndarray) else est
    row.branch[sel] = branch[sel] if isinstance(branch, np.ndarray) else branch.code
    row.via[sel] = via[sel] if isinstance(via, np.ndarray) else via
    pending &= ~mask


def direct_row(index: NodeIndex, u: int, row: Row, pending: np.ndarray) -> None:
    """Vectorised :func:`direct_lookup`."""
    n = index.n
    gi, gd = index.vic.row(u)
    if gi.size:
        row.probes[pending] += 1
        est = np.full(n, np.nan)
        est[gi] = gd
        mask = np.zeros(n, dtype=bool)
        mask[gi] = True
        settle(row, pending, mask, est, Branch.DIRECT)
    row.probes[pending & (index.vic.sizes > 0)] += 1
    oi, od = index.inv_vic.row(u)
    est = np.full(n, np.nan)
    est[oi] = od
    mask = np.zeros(n, dtype=bool)
    mask[oi] = True
    settle(row, pending, mask, est, Branch.DIRECT)


def intersect_row(index: NodeIndex, u: int, row: Row, pending: np.ndarray, strict: bool, mode: str = "ball"):
    """Vectorised :func:`intersect`; returns ``(best, via)`` arrays (``inf`` when absent)."""
    gi, gd = index.vic.row(u)
    if mode == "vicinity":
        row.probes[pending] += gi.size
        return min_plus(gi, gd, index.inv_vic)
    bi, bd = index.ball.row(u)
    row.probes[pending] += bi.size
    best, via = min_plus(bi, bd, index.inv_vic)
    if not strict:
        need = pending & ~np.isfinite(best)
        if need.any():
            row.probes[need] += index.ball.sizes[need]
            best2, via2 = min_plus(gi, gd, index.inv_ball)
            best = np.where(need, best2, best)
            via = np.where(need, via2, via)
    return best, via


def finish_row(row: Row, pending: np.ndarray, cand, cvia, cbranch: Branch, fb, fvia, fbranch, strict: bool) -> Row:
    """Pick the intersection candidate or the fallback exactly as the per-pair code does."""
    has = np.isfinite(cand)
    take = has if strict else has & (cand <= fb)
    settle(row, pending, take, cand, cbranch, cvia)
    settle(row, pending, np.ones_like(pending), fb, fbranch, fvia)
    return row
