"""Static simulation of compact routing on top of the stretch-2 oracle.

Every router keeps its tree-routing table (next hops toward its bunch
members, which include all top-level landmarks), its ball and vicinity with
first hops, its nearest landmark, and its own distance to every landmark, so
the landmark tables are spread across routers one column each.

A flow starts on the tree route (stretch at most 3). The source then sends
its ball ids to the destination, which intersects them with its vicinity and
answers with a meeting node or "empty"; the flow switches to the better of
the two routes. Probing and shortcutting lets the source additionally try
detours through members of its own vicinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .graph import Graph
from .landmarks import LandmarkSet
from .oracles.common import Branch, join
from .oracles.stretch2 import Stretch2Oracle, build_stretch2, query2, retrieve_path2
from .tz import TZOracle, tz_build, tz_route, tz_routing_tables

MTU = 1500
ID_BYTES = 4
ORDERS = ("farthest_first", "closest_first")
FLOW_CSV_HEADER = "src,dst,d_exact,initial_len,final_len,final_stretch,packets,bytes,probes"


@dataclass(frozen=True)
class RouterState:
    node: int
    tz_table: dict[int, int]
    ball_entries: dict[int, tuple[float, int]]
    vicinity_entries: dict[int, tuple[float, int]]
    landmark: int
    radius: float
    landmark_column: dict[int, float]
    degree: int

    @property
    def entry_count(self) -> int:
        """Table entries held by this router (its own landmark and radius count as two)."""
        return (
            len(self.tz_table)
            + len(self.ball_entries)
            + len(self.vicinity_entries)
            + len(self.landmark_column)
            + self.degree
            + 2
        )


@dataclass(frozen=True)
class Network:
    graph: Graph
    oracle: Stretch2Oracle
    tz: TZOracle
    tz_tables: list[dict[int, int]]
    routers: list[RouterState]
    mtu: int = MTU
    id_bytes: int = ID_BYTES

    @property
    def max_entries(self) -> int:
        return max(r.entry_count for r in self.routers)

    @property
    def mean_entries(self) -> float:
        return sum(r.entry_count for r in self.routers) / len(self.routers)

    @property
    def tz_entries(self) -> int:
        return sum(len(t) for t in self.tz_tables)


@dataclass(frozen=True)
class FlowTrace:
    src: int
    dst: int
    d_exact: float
    initial_path: list[int]
    initial_len: float
    handshake_packets: int
    handshake_bytes: int
    reply: int | None
    estimate: float
    final_path: list[int]
    final_len: float
    final_stretch: float
    probes_sent: int = 0
    probe_order: str | None = None

    def csv_row(self) -> str:
        return (
            f"{self.src},{self.dst},{self.d_exact!r},{self.initial_len!r},{self.final_len!r},"
            f"{self.final_stretch!r},{self.handshake_packets},{self.handshake_bytes},{self.probes_sent}"
        )


def default_alpha(g: Graph) -> float:
    """``sqrt(n / avg_degree)``, which balances per-router table sizes."""
    return min(float(g.n), max(1.0, math.sqrt(g.n / g.avg_degree)))


def deploy(
    g: Graph,
    alpha: float | None = None,
    seed: int = 0,
    *,
    sampling: str = "degree",
    landmarks: LandmarkSet | None = None,
    mtu: int = MTU,
    id_bytes: int = ID_BYTES,
) -> Network:
    """Build the oracle state and the tree-routing tables and place them on routers."""
    alpha = default_alpha(g) if alpha is None else alpha
    oracle = build_stretch2(g, alpha, "stored", seed, sampling=sampling, landmarks=landmarks)
    ids = oracle.landmark_ids
    tz = tz_build(g, 2, seed, first_level=ids.tolist())
    tables = tz_routing_tables(tz, g)
    routers = []
    for v in range(g.n):
        routers.append(
            RouterState(
                v,
                tables[v],
                oracle.balls[v].ball,
                oracle.vicinities[v].vicinity,
                int(oracle.nearest[v]),
                float(oracle.radius[v]),
                {int(l): float(oracle.table[i, v]) for i, l in enumerate(ids)},
                g.degree(v),
            )
        )
    return Network(g, oracle, tz, tables, routers, mtu, id_bytes)


def ball_list_cost(ball_size: int, mtu: int = MTU, id_bytes: int = ID_BYTES) -> tuple[int, int]:
    """Bytes and packets needed to ship ``ball_size`` node ids."""
    size = id_bytes * ball_size
    return size, max(1, math.ceil(size / mtu))


def _exact(net: Network, src: int, dst: int) -> float:
    from .graph import dijkstra

    return dijkstra(net.graph, src).dist[dst]


def _stretch(length: float, d: float) -> float:
    if d > 0:
        return length / d
    return 1.0 if length == 0 else math.inf


def handshake(net: Network, src: int, dst: int, d_exact: float | None = None) -> FlowTrace:
    d = _exact(net, src, dst) if d_exact is None else float(d_exact)
    if src == dst:
        return FlowTrace(src, dst, d, [src], 0.0, 0, 0, None, 0.0, [src], 0.0, 1.0)
    initial, _ = tz_route(net.tz, net.tz_tables, src, dst)
    initial_len = net.graph.path_weight(initial)
    data, packets = ball_list_cost(len(net.routers[src].ball_entries), net.mtu, net.id_bytes)
    qr = query2(net.oracle, src, dst)
    reply = qr.via if qr.branch is Branch.BALL else None
    final, final_len = initial, initial_len
    if qr.estimate < initial_len:
        final = retrieve_path2(net.oracle, qr, src, dst)
        final_len = net.graph.path_weight(final)
    return FlowTrace(
        src, dst, d, initial, initial_len, packets + 1, data, reply, qr.estimate, final, final_len, _stretch(final_len, d)
    )


def probe_sequence(net: Network, src: int, order: str) -> list[int]:
    vic = net.routers[src].vicinity_entries
    if order == "farthest_first":
        return sorted(vic, key=lambda w: (-vic[w][0], w))
    if order == "closest_first":
        return sorted(vic, key=lambda w: (vic[w][0], w))
    raise ValueError(f"unknown probe order {order!r}")


def probe_and_shortcut(net: Network, flow: FlowTrace, order: str, budget: int) -> FlowTrace:
    """Probe up to ``budget`` vicinity members of the source for landmark detours."""
    if flow.src == flow.dst or budget <= 0:
        return replace(flow, probe_order=order)
    o = net.oracle
    seq = probe_sequence(net, flow.src, order)[:budget]
    vic = net.routers[flow.src].vicinity_entries
    best, best_w = flow.estimate, None
    for w in seq:
        s = vic[w][0] + float(o.radius[w]) + o.landmark_distance(int(o.nearest[w]), flow.dst)
        if s < best:
            best, best_w = s, w
    final, final_len = flow.final_path, flow.final_len
    if best_w is not None and best < final_len:
        l = int(o.nearest[best_w])
        src_vic = o.vicinities[flow.src]
        final = join(src_vic.path_from_node(best_w), o.landmark_path(l, best_w)[::-1], o.landmark_path(l, flow.dst))
        final_len = net.graph.path_weight(final)
    return replace(
        flow,
        estimate=best,
        final_path=final,
        final_len=final_len,
        final_stretch=_stretch(final_len, flow.d_exact),
        probes_sent=flow.probes_sent + len(seq),
        probe_order=order,
    )


def sample_flows(n: int, count: int, seed: int) -> list[tuple[int, int]]:
    """Distinct ordered pairs ``src != dst`` drawn uniformly."""
    from . import rng

    if n < 2:
        return []
    stream = rng.Stream(seed, rng.stream_id(rng.FLOWS))
    total = n * (n - 1)
    count = min(count, total)
    seen: dict[tuple[int, int], None] = {}
    while len(seen) < count:
        for a, b in stream.integers(n, 2 * (count - len(seen)) + 2).reshape(-1, 2).tolist():
            if a != b and (a, b) not in seen:
                seen[(a, b)] = None
                if len(seen) == count:
                    break
    return list(seen)


def flows_csv(flows: list[FlowTrace]) -> str:
    return "\n".join([FLOW_CSV_HEADER, *(f.csv_row() for f in flows)]) + "\n"


def conservation_gap(net: Network) -> int:
    """Router entries minus (oracle size + tree tables); zero when nothing is lost or duplicated."""
    total = sum(r.entry_count for r in net.routers)
    return total - (net.oracle.size_entries + net.tz_entries)


def probe_curve(net: Network, flows: list[FlowTrace], order: str, budgets: list[int]) -> list[tuple[int, float]]:
    out = []
    for b in budgets:
        vals = [probe_and_shortcut(net, f, order, b).final_stretch for f in flows]
        out.append((b, float(np.mean(vals)) if vals else math.nan))
    return out
