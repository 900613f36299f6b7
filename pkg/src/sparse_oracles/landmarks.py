"""Landmark sampling, balls, vicinities and their intersections.

For a landmark set ``L`` every node ``v`` has a nearest landmark ``l(v)`` at
distance ``r_v``. Its ball ``B(v)`` holds the nodes strictly closer than
``r_v`` and its vicinity ``Γ(v)`` adds every neighbor of a ball member.
Landmarks have empty balls and empty vicinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol, TypeVar

import numpy as np

from . import rng
from .graph import Graph, settle_order

MODES = ("uniform", "degree", "forced", "paper-uniform", "paper-degree")
MAX_REDRAWS = 1000


class BuildError(RuntimeError):
    """An oracle could not be constructed (bad input or exhausted retries)."""


@dataclass(frozen=True)
class LandmarkSet:
    members: frozenset[int]
    mode: str
    alpha: float | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("landmark set must be non-empty")

    def __contains__(self, v: object) -> bool:
        return v in self.members

    def __len__(self) -> int:
        return len(self.members)

    @property
    def ids(self) -> np.ndarray:
        return np.array(sorted(self.members), dtype=np.int64)


def sampling_probabilities(g: Graph, mode: str, alpha: float) -> np.ndarray:
    """Per-node inclusion probability for a sampling mode.

    ``uniform``: ``1/alpha``. ``degree``: ``min(1, ceil(deg/avg_deg)/alpha)``.
    The ``paper-*`` modes are the evaluation profile: ``sqrt(log2 n)/alpha``
    uniformly, or that value times ``deg(v)/log2(n)**2``.
    """
    n = g.n
    if not 1 <= alpha <= max(n, 1):
        raise ValueError(f"alpha={alpha} outside [1, n={n}]")
    deg = np.array([g.degree(v) for v in range(n)], dtype=np.float64)
    if mode == "uniform":
        p = np.full(n, 1.0 / alpha)
    elif mode == "degree":
        delta = g.avg_degree
        if delta <= 0:
            raise ValueError("degree sampling needs at least one edge")
        p = np.ceil(deg / delta) / alpha
    elif mode in ("paper-uniform", "paper-degree"):
        log_n = math.log2(n) if n > 1 else 1.0
        p = np.full(n, math.sqrt(log_n) / alpha)
        if mode == "paper-degree":
            p = p * deg / log_n**2
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return np.minimum(p, 1.0)


def sample_landmarks(
    g: Graph,
    mode: str = "degree",
    alpha: float = 1.0,
    seed: int = 0,
    forced: Iterable[int] | None = None,
    attempt: int = 0,
) -> LandmarkSet:
    """Independent Bernoulli draw per node; an empty draw retries with ``seed + 1``.

    ``attempt`` selects a fresh stream for Las Vegas rebuilds.
    """
    if mode == "forced":
        members = frozenset(int(v) for v in forced or ())
        if any(not 0 <= v < g.n for v in members):
            raise ValueError("forced landmark outside the node range")
        return LandmarkSet(members, "forced", None, None)
    p = sampling_probabilities(g, mode, alpha)
    if not np.any(p > 0):
        raise BuildError("every sampling probability is zero")
    for s in range(seed, seed + MAX_REDRAWS):
        u = rng.Stream(s, rng.stream_id(rng.LANDMARKS, attempt)).uniforms(g.n)
        hit = np.flatnonzero(u < p)
        if hit.size:
            return LandmarkSet(frozenset(hit.tolist()), mode, float(alpha), s)
    raise BuildError(f"landmark sample empty for {MAX_REDRAWS} consecutive seeds")


def read_landmarks(path: str | Path) -> list[int]:
    """Forced-landmark file: one node id per line."""
    text = Path(path).read_text(encoding="utf-8")
    return [int(x) for x in text.split() if x]


@dataclass(frozen=True)
class BallInfo:
    node: int
    landmark: int
    radius: float
    ball: dict[int, tuple[float, int]]
    parent: dict[int, int] = field(default_factory=dict, repr=False)

    def path_from_node(self, w: int) -> list[int]:
        return _tree_path(self.node, self.parent, w)


@dataclass(frozen=True)
class VicinityInfo:
    """``vicinity`` maps each member of Γ(v) to ``(d(v, w), first hop)``.

    ``parent`` covers every vicinity member and the tree ancestors needed to
    walk back to ``node``; it supports path retrieval only.
    """

    node: int
    vicinity: dict[int, tuple[float, int]]
    parent: dict[int, int] = field(default_factory=dict, repr=False)

    def path_from_node(self, w: int) -> list[int]:
        return _tree_path(self.node, self.parent, w)


def _tree_path(root: int, parent: dict[int, int], w: int) -> list[int]:
    out = [w]
    while w != root:
        w = parent[w]
        out.append(w)
    out.reverse()
    return out


def grow_tables(g: Graph, v: int, members: frozenset[int], with_vicinity: bool) -> tuple[BallInfo, VicinityInfo | None]:
    """Grow one search from ``v``: first the ball, then (optionally) the vicinity."""
    if v in members:
        return BallInfo(v, v, 0.0, {}), (VicinityInfo(v, {}) if with_vicinity else None)
    seen: dict[int, tuple[float, int, int]] = {}  # node -> (dist, parent, first hop)

    def record(x: int, d: float, p: int) -> None:
        seen[x] = (d, p, x if p == v or x == v else seen[p][2])

    it = settle_order(g, v)
    pending = None
    landmark = -1
    radius = math.inf
    for item in it:
        x, d, p = item
        if landmark >= 0 and d > radius:
            pending = item
            break
        record(x, d, p)
        # Keep popping at distance r so the lowest-id nearest landmark wins.
        if x in members and (landmark < 0 or x < landmark):
            landmark, radius = x, d
    if landmark < 0:
        raise BuildError(f"node {v} cannot reach any landmark")
    ball = {x: (d, fh) for x, (d, _, fh) in seen.items() if d < radius}
    ball_info = BallInfo(v, landmark, radius, ball, {x: seen[x][1] for x in ball})
    if not with_vicinity:
        return ball_info, None

    targets = set(ball)
    for x in ball:
        targets.update(g.adj[x])
    missing = {t for t in targets if t not in seen}
    if missing and pending is not None:
        record(*pending)
        missing.discard(pending[0])
        for x, d, p in it if missing else ():
            record(x, d, p)
            missing.discard(x)
            if not missing:
                break
    vic = {t: (seen[t][0], seen[t][2]) for t in sorted(targets, key=lambda t: (seen[t][0], t))}
    keep: dict[int, int] = {}
    for t in targets:
        while t != v and t not in keep:
            keep[t] = seen[t][1]
            t = keep[t]
    return ball_info, VicinityInfo(v, vic, keep)


def compute_ball(g: Graph, v: int, landmarks: LandmarkSet) -> BallInfo:
    return grow_tables(g, v, landmarks.members, False)[0]


def compute_ball_and_vicinity(g: Graph, v: int, landmarks: LandmarkSet) -> tuple[BallInfo, VicinityInfo]:
    ball, vic = grow_tables(g, v, landmarks.members, True)
    assert vic is not None
    return ball, vic


def compute_vicinity(g: Graph, ball: BallInfo) -> VicinityInfo:
    """Vicinity of ``ball.node``; the search reruns until every member is settled."""
    v = ball.node
    if not ball.ball:
        return VicinityInfo(v, {})
    targets = set(ball.ball)
    for x in ball.ball:
        targets.update(g.adj[x])
    missing = set(targets)
    seen: dict[int, tuple[float, int, int]] = {}
    for x, d, p in settle_order(g, v):
        seen[x] = (d, p, x if p == v or x == v else seen[p][2])
        missing.discard(x)
        if not missing:
            break
    vic = {t: (seen[t][0], seen[t][2]) for t in sorted(targets, key=lambda t: (seen[t][0], t))}
    keep: dict[int, int] = {}
    for t in targets:
        while t != v and t not in keep:
            keep[t] = seen[t][1]
            t = keep[t]
    return VicinityInfo(v, vic, keep)


Candidate = tuple[int, float, int]  # (best node, distance sum, probes)


def best_common(source: dict[int, tuple[float, int]], target: dict[int, tuple[float, int]]) -> Candidate | None:
    """Scan ``source`` and probe ``target``; minimise ``d_source + d_target``.

    Ties go to the lowest node id. Every scanned entry is one probe, so the
    probe count is ``len(source)`` whether or not anything is found.
    """
    best_w = -1
    best_s = math.inf
    for w, (dw, _) in source.items():
        e = target.get(w)
        if e is None:
            continue
        s = dw + e[0]
        if s < best_s or (s == best_s and w < best_w):
            best_w, best_s = w, s
    if best_w < 0:
        return None
    return best_w, best_s, len(source)


def ball_vicinity_intersect(bu: BallInfo, gv: VicinityInfo) -> tuple[int, float] | None:
    hit = best_common(bu.ball, gv.vicinity)
    return None if hit is None else (hit[0], hit[1])


def ball_ball_intersect(bu: BallInfo, bv: BallInfo) -> tuple[int, float] | None:
    hit = best_common(bu.ball, bv.ball)
    return None if hit is None else (hit[0], hit[1])


# ---------------------------------------------------------------------------
# per-graph context
# ---------------------------------------------------------------------------


def nearest_landmarks(rows: np.ndarray, landmark_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(l(v), r_v)`` for every node from per-landmark distance rows.

    ``rows[i]`` holds distances from ``landmark_ids[i]`` (sorted ascending),
    so ``argmin`` resolves ties to the lowest landmark id.
    """
    idx = np.argmin(rows, axis=0)
    cols = np.arange(rows.shape[1])
    return landmark_ids[idx], rows[idx, cols]


@dataclass
class LandmarkContext:
    """Balls and vicinities of every node for one graph and landmark set."""

    graph: Graph
    landmarks: LandmarkSet
    balls: list[BallInfo]
    vicinities: list[VicinityInfo] | None

    @classmethod
    def build(cls, g: Graph, landmarks: LandmarkSet, with_vicinities: bool = True) -> "LandmarkContext":
        balls: list[BallInfo] = []
        vics: list[VicinityInfo] | None = [] if with_vicinities else None
        for v in range(g.n):
            b, gv = grow_tables(g, v, landmarks.members, with_vicinities)
            balls.append(b)
            if vics is not None:
                vics.append(gv)
        return cls(g, landmarks, balls, vics)

    def ball_entries(self) -> int:
        return sum(len(b.ball) for b in self.balls)

    def vicinity_entries(self) -> int:
        return sum(len(x.vicinity) for x in self.vicinities or ())

    def dump_csv(self) -> str:
        """Debug table ``v,l,r,|B|,|Γ|``."""
        lines = ["v,landmark,radius,ball_size,vicinity_size"]
        for b in self.balls:
            vs = len(self.vicinities[b.node].vicinity) if self.vicinities is not None else ""
            lines.append(f"{b.node},{b.landmark},{b.radius!r},{len(b.ball)},{vs}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Las Vegas wrapper
# ---------------------------------------------------------------------------


class Sized(Protocol):
    size_entries: int


T = TypeVar("T", bound=Sized)


def las_vegas_build(builder: Callable[[int], T], size_bound: float, max_attempts: int = 8) -> T:
    """Call ``builder(attempt)`` until the result fits in ``size_bound`` entries."""
    sizes: list[int] = []
    for attempt in range(max_attempts):
        oracle = builder(attempt)
        if oracle.size_entries <= size_bound:
            return oracle
        sizes.append(oracle.size_entries)
    raise BuildError(f"size bound {size_bound:g} not met in {max_attempts} attempts (sizes {sizes})")


def require_connected(g: Graph) -> None:
    if not g.connected:
        raise BuildError("oracles require a connected graph")
    if g.n == 0:
        raise BuildError("empty graph")
