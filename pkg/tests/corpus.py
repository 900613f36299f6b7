"""Shared graph corpus and per-configuration checks for the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from time import perf_counter

import numpy as np

from sparse_oracles.graph import Graph, exact_oracle, gen_geometric, gen_gnm, heaviest_edges
from sparse_oracles.oracles.additive import build_additive, query_additive, query_additive_row
from sparse_oracles.oracles.common import min_plus
from sparse_oracles.oracles.mult import build_mult, query_mult, query_mult_row
from sparse_oracles.oracles.stretch2 import build_stretch2, query2, query2_row
from sparse_oracles.tz import tz_build, tz_matrix

REL = 1e-9
ALPHAS = (2.0, 16.0, 64.0)
SEEDS = tuple(range(5))
N_GNM, N_GEO = 50, 20
SPOT_PAIRS = 48


def _distinct_connected(make, count: int) -> list[Graph]:
    out: list[Graph] = []
    seen: set[Graph] = set()
    s = 0
    while len(out) < count:
        g = make(s)
        s += 1
        if g.connected and g not in seen:
            seen.add(g)
            out.append(g)
    return out


@lru_cache(maxsize=1)
def corpus() -> list[tuple[str, Graph]]:
    gnm = _distinct_connected(lambda s: gen_gnm(256, 768, s), N_GNM)
    geo = _distinct_connected(lambda s: gen_geometric(256, 6, s), N_GEO)
    return [(f"gnm{i}", g) for i, g in enumerate(gnm)] + [(f"geo{i}", g) for i, g in enumerate(geo)]


@dataclass
class Exact:
    d: np.ndarray
    w: np.ndarray


def exact(g: Graph) -> Exact:
    d, pred = exact_oracle(g, return_predecessors=True)
    return Exact(d, heaviest_edges(g, pred))


def above(est: np.ndarray, bound: np.ndarray) -> np.ndarray:
    return est > bound * (1 + REL) + 1e-12


def below(est: np.ndarray, d: np.ndarray) -> np.ndarray:
    return est < d * (1 - REL)


@dataclass
class Tally:
    """Violation counters keyed by check name, plus pair counts."""

    bad: dict[str, int] = field(default_factory=dict)
    pairs: dict[str, int] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def count(self, name: str, mask: np.ndarray | bool, pairs: int = 1, where: str = "") -> None:
        hits = int(np.count_nonzero(mask))
        self.bad[name] = self.bad.get(name, 0) + hits
        self.pairs[name] = self.pairs.get(name, 0) + pairs
        if hits and len(self.notes) < 20:
            self.notes.append(f"{name}: {hits} at {where}")

    def merge(self, other: "Tally") -> None:
        for k, v in other.bad.items():
            self.bad[k] = self.bad.get(k, 0) + v
        for k, v in other.pairs.items():
            self.pairs[k] = self.pairs.get(k, 0) + v
        self.notes.extend(other.notes[: max(0, 20 - len(self.notes))])
        self.seconds += other.seconds


def _spot(n: int, seed: int) -> list[tuple[int, int]]:
    r = np.random.default_rng(seed)
    return [tuple(x) for x in r.integers(0, n, size=(SPOT_PAIRS, 2)).tolist()]


def check_stretch2(g: Graph, ex: Exact, alpha: float, seed: int, where: str, t: Tally) -> None:
    """Bounds, exactness condition, intersection radius bounds and probe counts for the stretch-2 oracle.

    ``t.seconds`` accumulates only the soundness work: build, row queries and the two bound checks.
    """
    start = perf_counter()
    o = build_stretch2(g, alpha, "onfly", seed)
    idx = o.index()
    t.seconds += perf_counter() - start
    n = g.n
    r = o.radius
    bsize, vsize = idx.ball.sizes, idx.vic.sizes
    for u in range(n):
        start = perf_counter()
        row = query2_row(o, u, idx)
        d = ex.d[u]
        est = row.estimate
        t.count("stretch2_upper", above(est, 2 * d), n, where)
        t.count("stretch2_lower", below(est, d), n, where)
        t.seconds += perf_counter() - start
        close = d < r[u] + r
        t.count("exact_when_close", close & (np.abs(est - d) > REL * d), int(close.sum()), where)
        bi, bd = idx.ball.row(u)
        bv, _ = min_plus(bi, bd, idx.inv_vic)
        empty = ~np.isfinite(bv)
        t.count("radius_bound_ball_vicinity", empty & (d < (r[u] + r) * (1 - REL)), int(empty.sum()), where)
        bb, _ = min_plus(bi, bd, idx.inv_ball)
        empty = ~np.isfinite(bb)
        t.count("radius_bound_ball_ball", empty & (d < (r[u] + r - ex.w[u]) * (1 - REL) - 1e-12), int(empty.sum()), where)
        t.count("probes_query2", row.probes > bsize[u] + vsize[u] + vsize, n, where)
    for u, v in _spot(n, seed):
        qr = query2(o, u, v)
        ref = query2_row(o, u, idx).result(v)
        t.count("row_matches_query2", qr.estimate != ref.estimate or qr.branch != ref.branch, 1, where)


def check_mult(g: Graph, ex: Exact, alpha: float, seed: int, k: int, where: str, t: Tally) -> None:
    o = build_mult(g, alpha, k, "onfly", seed)
    idx = o.index()
    for u in range(g.n):
        est = query_mult_row(o, u, idx).estimate
        t.count(f"mult_k{k}_upper", above(est, (4 * k - 1) * ex.d[u]), g.n, where)
        t.count(f"mult_k{k}_lower", below(est, ex.d[u]), g.n, where)
    for u, v in _spot(g.n, seed + 1):
        ref = query_mult_row(o, u, idx).estimate[v]
        t.count("row_matches_query_mult", query_mult(o, u, v).estimate != ref, 1, where)


def check_additive(g: Graph, ex: Exact, alpha: float, seed: int, where: str, t: Tally) -> None:
    unit = g.unit_weights
    cases = [("two_plus", 1), ("fourk_plus", 1), ("fourk_plus", 2)]
    for mode, k in cases:
        o = build_additive(g, alpha, mode, seed, k=k)
        idx = o.index()
        name = "additive2" if mode == "two_plus" else f"additive4k_k{k}"
        bsize = idx.ball.sizes
        for u in range(g.n):
            row = query_additive_row(o, u, idx)
            d, w, est = ex.d[u], ex.w[u], row.estimate
            bound = 2 * d + w if mode == "two_plus" else (4 * k - 1) * d + 2 * k * w
            t.count(f"{name}_upper", above(est, bound), g.n, where)
            t.count(f"{name}_lower", below(est, d), g.n, where)
            if unit and mode == "two_plus":
                t.count("additive2_unweighted_2d_plus_1", above(est, 2 * d + 1), g.n, where)
            t.count("probes_additive", row.probes > bsize[u] + 2, g.n, where)
        for u, v in _spot(g.n, seed + 2):
            ref = query_additive_row(o, u, idx).result(v)
            qr = query_additive(o, u, v)
            t.count("row_matches_query_additive", qr.estimate != ref.estimate or qr.probes != ref.probes, 1, where)


def check_tz(g: Graph, ex: Exact, seed: int, where: str, t: Tally) -> None:
    for k in (1, 2, 3):
        est = tz_matrix(tz_build(g, k, seed))
        t.count(f"tz_k{k}_upper", above(est, (2 * k - 1) * ex.d), g.n * g.n, where)
        t.count(f"tz_k{k}_lower", below(est, ex.d), g.n * g.n, where)
        if k == 1:
            t.count("tz_k1_exact", np.abs(est - ex.d) > REL * ex.d, g.n * g.n, where)


FLOWS_PER_CONFIG = 128
PROBED_FLOWS = 8


def check_routing(g: Graph, ex: Exact, alpha: float, seed: int, where: str, t: Tally) -> None:
    from sparse_oracles import routing as rt
    from sparse_oracles.oracles.stretch2 import query2_optimized

    net = rt.deploy(g, alpha, seed)
    t.count("routing_conservation", rt.conservation_gap(net) != 0, 1, where)
    flows = [rt.handshake(net, s, d, ex.d[s, d]) for s, d in rt.sample_flows(g.n, FLOWS_PER_CONFIG, seed)]
    for f in flows:
        t.count("handshake_stretch", f.final_stretch > 2 * (1 + REL), 1, where)
        small = 4 * len(net.routers[f.src].ball_entries) <= 1500
        t.count("handshake_packets", small and f.handshake_packets > 2, int(small), where)
        t.count("handshake_path_weight", abs(g.path_weight(f.final_path) - f.final_len) > REL * f.final_len, 1, where)
    for f in flows[:PROBED_FLOWS]:
        size = len(net.routers[f.src].vicinity_entries)
        for order in rt.ORDERS:
            prev = f.final_stretch
            for b in range(size + 1):
                p = rt.probe_and_shortcut(net, f, order, b)
                t.count("probe_monotone", p.final_stretch > prev * (1 + REL), 1, where)
                prev = p.final_stretch
            full = rt.probe_and_shortcut(net, f, order, size)
            t.count("probe_full_budget", full.estimate != query2_optimized(net.oracle, f.src, f.dst).estimate, 1, where)
