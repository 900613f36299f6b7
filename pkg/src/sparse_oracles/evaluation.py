"""Experiment harness: build schemes, query sampled pairs, compare with exact distances.

Schemes are named ``tz(k)``, ``tz_degree_sampled(k)``, ``rear``, ``rear_opt``,
``res(k)``, ``res_opt(k)``, ``additive2`` and ``additive4k(k)``. Under the
``paper-eval`` sampling profile landmarks are drawn with the evaluation
probabilities (``sqrt(log2 n)/alpha``, times ``deg/log2(n)^2`` for the
degree-aware schemes) and no Las Vegas size bound is enforced.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import rng
from .graph import VERIFY_CAP, Graph, GraphError, connected_instance, exact_oracle, largest_component, gen_geometric, gen_gnm, heaviest_edges, read_graph
from .landmarks import sample_landmarks
from .oracles.additive import build_additive, query_additive_row
from .oracles.common import BRANCHES, Branch, NodeIndex, Row, dense_min_plus, min_plus
from .oracles.mult import build_mult, query_mult_optimized_row, query_mult_row
from .oracles.stretch2 import build_stretch2, query2_optimized_row, query2_row, shortcut_rows
from .tz import ClusterIndex, tz_build, tz_row

PROFILES = ("paper-eval", "uniform", "degree")
SCHEME_FAMILIES = ("tz", "tz_degree_sampled", "rear", "rear_opt", "res", "res_opt", "additive2", "additive4k")
THRESHOLDS = tuple(round(1.0 + 0.05 * i, 2) for i in range(41))
REL_TOL = 1e-9
GRAPH_RETRIES = 20
PAIR_CSV_HEADER = "scheme,seed,u,v,d,estimate,stretch,branch,vicinity_intersect"

_SCHEME_RE = re.compile(r"^\s*([a-z0-9_]+)\s*(?:\(\s*(\d+)\s*\))?\s*$")
_TOPOLOGY_RE = re.compile(r"^\s*(gnm|geometric|file)\s*\((.*)\)\s*$")
_SOURCES_RE = re.compile(r"^\s*sources\s*\(\s*([0-9.]+)\s*(?:/\s*([0-9.]+))?\s*\)\s*$")


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class Scheme:
    family: str
    k: int = 1

    @property
    def name(self) -> str:
        return f"{self.family}({self.k})" if self.family in ("tz", "tz_degree_sampled", "res", "res_opt", "additive4k") else self.family

    @property
    def has_vicinities(self) -> bool:
        return self.family in ("rear", "rear_opt", "res", "res_opt")


def parse_scheme(text: str) -> Scheme:
    m = _SCHEME_RE.match(text)
    if not m or m.group(1) not in SCHEME_FAMILIES:
        raise ExperimentError(f"unknown scheme {text!r}")
    family, k = m.group(1), m.group(2)
    takes_k = family in ("tz", "tz_degree_sampled", "res", "res_opt", "additive4k")
    if k is not None and not takes_k:
        raise ExperimentError(f"scheme {family} takes no k")
    k_val = int(k) if k is not None else (2 if family in ("tz", "tz_degree_sampled") else 1)
    if k_val < 1:
        raise ExperimentError("k must be >= 1")
    return Scheme(family, k_val)


def parse_sources(text: str) -> float | None:
    """``all`` gives None; ``sources(f)`` or ``sources(a/b)`` gives the fraction."""
    if text.strip() == "all":
        return None
    m = _SOURCES_RE.match(text)
    if not m:
        raise ExperimentError(f"bad pair sampling {text!r}")
    frac = float(m.group(1)) / (float(m.group(2)) if m.group(2) else 1.0)
    if not 0 < frac <= 1:
        raise ExperimentError("source fraction must lie in (0, 1]")
    return frac


@dataclass(frozen=True)
class Experiment:
    topology: str
    schemes: tuple[str, ...]
    alpha: float
    seeds: tuple[int, ...]
    pair_sampling: str = "all"
    sampling: str = "paper-eval"
    variant: str = "onfly"
    intersection: str = "ball"
    strict: bool = False
    exact: bool = True

    def __post_init__(self) -> None:
        if self.sampling not in PROFILES:
            raise ExperimentError(f"unknown sampling profile {self.sampling!r}")
        if self.variant not in ("onfly", "stored"):
            raise ExperimentError(f"unknown variant {self.variant!r}")
        if self.intersection not in ("ball", "vicinity"):
            raise ExperimentError(f"unknown intersection mode {self.intersection!r}")
        self.parsed_schemes()
        parse_sources(self.pair_sampling)
        parse_topology(self.topology)

    def parsed_schemes(self) -> list[Scheme]:
        return [parse_scheme(s) for s in self.schemes]


def parse_topology(text: str) -> tuple[str, list[str]]:
    m = _TOPOLOGY_RE.match(text)
    if not m:
        raise ExperimentError(f"bad topology {text!r}")
    kind, args = m.group(1), [a.strip() for a in m.group(2).split(",")] if m.group(2).strip() else []
    if kind in ("gnm", "geometric") and len(args) != 2:
        raise ExperimentError(f"{kind} takes two arguments")
    if kind == "file" and len(args) != 1:
        raise ExperimentError("file takes one path")
    return kind, args


def topology_graph(topology: str, seed: int, retries: int = GRAPH_RETRIES) -> Graph:
    """Generated graph for ``seed``; retries later seeds while disconnected, then keeps the largest component."""
    kind, args = parse_topology(topology)
    if kind == "file":
        g = read_graph(args[0])
        return g if g.connected else largest_component(g)[0]
    if kind == "gnm":
        n, m = int(args[0]), int(args[1])
        make = lambda s: gen_gnm(n, m, s)
    else:
        n, deg = int(args[0]), float(args[1])
        make = lambda s: gen_geometric(n, deg, s)
    try:
        return connected_instance(make, seed, retries)[0]
    except GraphError:
        return largest_component(make(seed))[0]


def sample_sources(n: int, fraction: float | None, seed: int) -> np.ndarray:
    """All nodes, or ``ceil(fraction * n)`` of them chosen by a seeded permutation, ascending."""
    if fraction is None:
        return np.arange(n)
    count = max(1, math.ceil(fraction * n))
    keys = rng.Stream(seed, rng.stream_id(rng.PAIRS)).uniforms(n)
    return np.sort(np.argsort(keys, kind="stable")[:count])


def proven_bound(scheme: Scheme, d: np.ndarray, w: np.ndarray | None) -> np.ndarray:
    f, k = scheme.family, scheme.k
    if f in ("tz", "tz_degree_sampled"):
        return (2 * k - 1) * d
    if f in ("rear", "rear_opt"):
        return 2 * d
    if f in ("res", "res_opt"):
        return (4 * k - 1) * d
    if f == "additive2":
        return 2 * d + w
    return (4 * k - 1) * d + 2 * k * w


# ---------------------------------------------------------------------------
# building and querying schemes
# ---------------------------------------------------------------------------


def _landmark_mode(scheme: Scheme, profile: str) -> str:
    paper = profile == "paper-eval"
    if scheme.family == "tz":
        return "paper-uniform" if paper else "uniform"
    if scheme.family == "tz_degree_sampled":
        return "paper-degree" if paper else "degree"
    if scheme.family in ("additive2", "additive4k"):
        return "paper-uniform" if paper else profile
    return "paper-degree" if paper else profile


class SchemeRunner:
    """Builds each scheme once per seed and evaluates whole rows of queries."""

    def __init__(self, e: Experiment, g: Graph, seed: int) -> None:
        self.e, self.g, self.seed = e, g, seed
        self.size_constant = None if e.sampling == "paper-eval" else 4.0
        self._oracles: dict[tuple, object] = {}
        self._indices: dict[tuple, object] = {}

    def oracle(self, scheme: Scheme):
        f, e, g = scheme.family, self.e, self.g
        mode = _landmark_mode(scheme, e.sampling)
        key = {"rear_opt": "rear", "res_opt": "res"}.get(f, f), scheme.k
        if key in self._oracles:
            return self._oracles[key]
        if f in ("tz", "tz_degree_sampled"):
            first = None
            if scheme.k > 1:
                first = sample_landmarks(g, mode, e.alpha, self.seed).ids.tolist()
            o = tz_build(g, scheme.k, self.seed, first_level=first)
        elif f in ("rear", "rear_opt"):
            o = build_stretch2(
                g, e.alpha, e.variant, self.seed, sampling=mode, strict=e.strict, size_constant=self.size_constant
            )
        elif f in ("res", "res_opt"):
            o = build_mult(
                g, e.alpha, scheme.k, e.variant, self.seed, sampling=mode, strict=e.strict, size_constant=self.size_constant
            )
        else:
            o = build_additive(
                g,
                e.alpha,
                "two_plus" if f == "additive2" else "fourk_plus",
                self.seed,
                k=scheme.k,
                sampling=mode,
                size_constant=self.size_constant,
            )
        self._oracles[key] = o
        return o

    def index(self, scheme: Scheme):
        o = self.oracle(scheme)
        key = id(o)
        if key not in self._indices:
            self._indices[key] = ClusterIndex(o) if scheme.family.startswith("tz") else o.index()
        return self._indices[key]

    def row(self, scheme: Scheme, u: int) -> Row:
        o, idx, f = self.oracle(scheme), self.index(scheme), scheme.family
        if f in ("tz", "tz_degree_sampled"):
            n = self.g.n
            est = tz_row(o, u, idx)
            return Row(u, est, np.full(n, Branch.TZ.code, dtype=np.int8), np.full(n, -1, dtype=np.int64), np.zeros(n, dtype=np.int64))
        if f == "rear":
            return query2_row(o, u, idx, intersection=self.e.intersection)
        if f == "rear_opt":
            return query2_optimized_row(o, u, idx, query2_row(o, u, idx, intersection=self.e.intersection))
        if f == "res":
            return query_mult_row(o, u, idx, intersection=self.e.intersection)
        if f == "res_opt":
            return query_mult_optimized_row(o, u, idx, query_mult_row(o, u, idx, intersection=self.e.intersection))
        return query_additive_row(o, u, idx)

    def vicinity_hits(self, scheme: Scheme, u: int) -> np.ndarray:
        """``Γ(u) ∩ Γ(v) ≠ ∅`` for every ``v``."""
        idx: NodeIndex = self.index(scheme)
        gi, gd = idx.vic.row(u)
        best, _ = min_plus(gi, gd, idx.inv_vic)
        return np.isfinite(best)


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


@dataclass
class Summary:
    pairs: int = 0
    exact: int = 0
    stretch_sum: float = 0.0
    max_stretch: float = 0.0
    vicinity: int = 0
    vicinity_known: bool = True
    above: np.ndarray = field(default_factory=lambda: np.zeros(len(THRESHOLDS), dtype=np.int64))

    def add(self, d: np.ndarray, est: np.ndarray, stretch: np.ndarray, vic: np.ndarray | None) -> None:
        """Fold in one source's pairs; chunks must arrive in canonical order."""
        if d.size == 0:
            return
        self.pairs += d.size
        self.exact += int(np.count_nonzero(est <= d * (1 + REL_TOL)))
        self.stretch_sum += float(np.sum(stretch))
        self.max_stretch = max(self.max_stretch, float(np.max(stretch)))
        for i, t in enumerate(THRESHOLDS):
            self.above[i] += int(np.count_nonzero(stretch > t * (1 + REL_TOL)))
        if vic is None:
            self.vicinity_known = False
        else:
            self.vicinity += int(np.count_nonzero(vic))

    @property
    def fraction_exact(self) -> float:
        return self.exact / self.pairs if self.pairs else math.nan

    @property
    def mean_stretch(self) -> float:
        return self.stretch_sum / self.pairs if self.pairs else math.nan

    @property
    def fraction_vicinity_intersect(self) -> float | None:
        if not self.vicinity_known:
            return None
        return self.vicinity / self.pairs if self.pairs else math.nan

    def cdf(self) -> list[tuple[float, float]]:
        """Complementary CDF: fraction of pairs with stretch above each threshold."""
        return [(t, (int(c) / self.pairs) if self.pairs else math.nan) for t, c in zip(THRESHOLDS, self.above)]

    def as_dict(self) -> dict[str, float | int | None]:
        return {
            "pairs": self.pairs,
            "fraction_exact": self.fraction_exact,
            "mean_stretch": self.mean_stretch,
            "max_stretch": self.max_stretch,
            "fraction_vicinity_intersect": self.fraction_vicinity_intersect,
        }


@dataclass
class PairRows:
    """Per-pair results of one scheme and seed in canonical ``(u, v)`` order."""

    u: np.ndarray
    v: np.ndarray
    d: np.ndarray
    estimate: np.ndarray
    stretch: np.ndarray
    branch: np.ndarray
    vicinity: np.ndarray | None


@dataclass
class StretchReport:
    scheme: str
    summary: Summary
    per_seed: dict[int, Summary]
    rows: dict[int, PairRows] | None = None
    violations: int = 0

    def cdf(self) -> list[tuple[float, float]]:
        return self.summary.cdf()


def _stretch(d: np.ndarray, est: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        s = est / d
    zero = d == 0
    s[zero] = np.where(est[zero] == 0, 1.0, math.inf)
    return s


def _seed_graphs(e: Experiment) -> Iterator[tuple[int, Graph]]:
    kind, _ = parse_topology(e.topology)
    fixed = topology_graph(e.topology, 0) if kind == "file" else None
    for seed in e.seeds:
        yield seed, fixed if fixed is not None else topology_graph(e.topology, seed)


def _exact_rows(e: Experiment, g: Graph, sources: np.ndarray, need_w: bool):
    if not e.exact:
        return None, None
    if need_w:
        d, pred = exact_oracle(g, sources=sources, return_predecessors=True)
        return d, heaviest_edges(g, pred, sources)
    return exact_oracle(g, sources=sources), None


def run_experiment(e: Experiment, *, keep_rows: bool = True) -> list[StretchReport]:
    """One report per scheme, in the experiment's scheme order."""
    schemes = e.parsed_schemes()
    if not schemes:
        return []
    fraction = parse_sources(e.pair_sampling)
    reports = [StretchReport(s.name, Summary(), {}, {} if keep_rows else None) for s in schemes]
    need_w = any(s.family.startswith("additive") for s in schemes)
    for seed, g in _seed_graphs(e):
        if e.exact and g.n > VERIFY_CAP:
            raise GraphError(f"n={g.n} exceeds the exact-oracle cap; pass --no-exact to skip verification")
        runner = SchemeRunner(e, g, seed)
        sources = sample_sources(g.n, fraction, seed)
        dist, wmax = _exact_rows(e, g, sources, need_w)
        for scheme, rep in zip(schemes, reports):
            summ = rep.per_seed.setdefault(seed, Summary())
            cols: dict[str, list[np.ndarray]] = {k: [] for k in ("u", "v", "d", "est", "st", "br", "vic")}
            vic_shared = scheme.has_vicinities
            for i, u in enumerate(sources.tolist()):
                row = runner.row(scheme, u)
                others = np.flatnonzero(np.arange(g.n) != u)
                est = row.estimate[others]
                d = dist[i, others] if dist is not None else np.full(others.size, math.nan)
                st = _stretch(d, est) if dist is not None else np.full(others.size, math.nan)
                vic = runner.vicinity_hits(scheme, u)[others] if vic_shared else None
                if dist is not None:
                    summ.add(d, est, st, vic)
                    rep.summary.add(d, est, st, vic)
                    w = wmax[i, others] if wmax is not None else None
                    bound = proven_bound(scheme, d, w)
                    checked = e.intersection == "ball" and not (e.strict and scheme.family.startswith("rear"))
                    if checked:
                        bad = (est > bound * (1 + REL_TOL) + 1e-12) | (est < d * (1 - REL_TOL))
                        rep.violations += int(np.count_nonzero(bad))
                if keep_rows:
                    cols["u"].append(np.full(others.size, u, dtype=np.int64))
                    cols["v"].append(others)
                    cols["d"].append(d)
                    cols["est"].append(est)
                    cols["st"].append(st)
                    cols["br"].append(row.branch[others])
                    if vic is not None:
                        cols["vic"].append(vic)
            if keep_rows:
                cat = lambda name, dt: np.concatenate(cols[name]) if cols[name] else np.zeros(0, dtype=dt)
                rep.rows[seed] = PairRows(
                    cat("u", np.int64),
                    cat("v", np.int64),
                    cat("d", np.float64),
                    cat("est", np.float64),
                    cat("st", np.float64),
                    cat("br", np.int8),
                    cat("vic", bool) if vic_shared else None,
                )
    return reports


def bound_violations(reports: list[StretchReport]) -> int:
    return sum(r.violations for r in reports)


# ---------------------------------------------------------------------------
# probing curves
# ---------------------------------------------------------------------------


def _probe_order(gi: np.ndarray, gd: np.ndarray, order: str) -> np.ndarray:
    if order == "farthest_first":
        return np.lexsort((gi, -gd))
    if order == "closest_first":
        return np.lexsort((gi, gd))
    raise ExperimentError(f"unknown probe order {order!r}")


def stretch_vs_probes(
    e: Experiment, budgets: list[int], orders: tuple[str, ...] = ("farthest_first", "closest_first")
) -> dict[tuple[str, str], list[tuple[int, float]]]:
    """Mean stretch after probing the first ``b`` candidates of the source, per budget.

    Candidates are vicinity members for ``rear`` schemes and ball members for
    ``res`` schemes; budget 0 is the scheme itself.
    """
    if not e.exact:
        raise ExperimentError("probe curves need exact distances")
    schemes = [s for s in e.parsed_schemes() if s.family in ("rear", "rear_opt", "res", "res_opt")]
    budgets = sorted(set(int(b) for b in budgets))
    if any(b < 0 for b in budgets):
        raise ExperimentError("budgets must be non-negative")
    fraction = parse_sources(e.pair_sampling)
    sums = {(s.name, o): np.zeros(len(budgets)) for s in schemes for o in orders}
    count = 0
    for seed, g in _seed_graphs(e):
        runner = SchemeRunner(e, g, seed)
        sources = sample_sources(g.n, fraction, seed)
        dist = exact_oracle(g, sources=sources)
        count += sources.size * (g.n - 1)
        for i, u in enumerate(sources.tolist()):
            others = np.arange(g.n) != u
            d = dist[i, others]
            for s in schemes:
                o, idx = runner.oracle(s), runner.index(s)
                plain = runner.row(s, u).estimate
                for order in orders:
                    if s.family.startswith("rear"):
                        gi, gd = idx.vic.row(u)
                        ws, base, rows = shortcut_rows(o, u, idx, _probe_order(gi, gd, order))
                    else:
                        bi, bd = idx.ball.row(u)
                        perm = _probe_order(bi, bd, order)
                        ws, bd = bi[perm], bd[perm]
                        dense = o.metric.dense(np.arange(g.n))
                        base = bd + o.radius[ws]
                        rows = o.metric.matrix()[dense[ws]][:, dense] + o.radius[None, :]
                    cur = plain.copy()
                    done = 0
                    for j, b in enumerate(budgets):
                        b = min(b, ws.size)
                        if b > done:
                            best, _ = dense_min_plus(ws[done:b], base[done:b], rows[done:b])
                            cur = np.minimum(cur, best)
                            done = b
                        sums[(s.name, order)][j] += float(np.sum(_stretch(d, cur[others])))
    return {key: [(b, float(v / count)) for b, v in zip(budgets, arr)] for key, arr in sums.items()}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(x: float | None) -> str:
    if x is None:
        return "n/a"
    return f"{x:.6f}"


def pairs_csv(reports: list[StretchReport]) -> str:
    buf = io.StringIO()
    buf.write(PAIR_CSV_HEADER + "\n")
    for rep in reports:
        if rep.rows is None:
            raise ExperimentError("report was produced without per-pair rows")
        for seed in rep.rows:
            r = rep.rows[seed]
            vic = r.vicinity.astype(np.int8).tolist() if r.vicinity is not None else [""] * r.u.size
            for u, v, d, est, st, br, x in zip(
                r.u.tolist(), r.v.tolist(), r.d.tolist(), r.estimate.tolist(), r.stretch.tolist(), r.branch.tolist(), vic
            ):
                buf.write(f"{rep.scheme},{seed},{u},{v},{d!r},{est!r},{st!r},{BRANCHES[br].value},{x}\n")
    return buf.getvalue()


def summary_text(reports: list[StretchReport]) -> str:
    lines = []
    for rep in reports:
        s = rep.summary
        lines.append(f"scheme {rep.scheme}")
        for key, val in s.as_dict().items():
            lines.append(f"  {key} {val if isinstance(val, int) else _fmt(val)}")
        for seed in sorted(rep.per_seed):
            p = rep.per_seed[seed]
            lines.append(
                f"  seed {seed}: fraction_exact {_fmt(p.fraction_exact)} mean_stretch {_fmt(p.mean_stretch)}"
                f" max_stretch {_fmt(p.max_stretch)} fraction_vicinity_intersect {_fmt(p.fraction_vicinity_intersect)}"
            )
    if reports:
        lines.append("cdf threshold " + " ".join(r.scheme for r in reports))
        cdfs = [r.cdf() for r in reports]
        for i, t in enumerate(THRESHOLDS):
            lines.append(f"{t:.2f} " + " ".join(_fmt(c[i][1]) for c in cdfs))
    return "\n".join(lines) + "\n"


def cdf_csv(reports: list[StretchReport]) -> str:
    lines = ["scheme,threshold,fraction_above"]
    for rep in reports:
        lines.extend(f"{rep.scheme},{t:.2f},{f!r}" for t, f in rep.cdf())
    return "\n".join(lines) + "\n"


def curves_csv(curves: dict[tuple[str, str], list[tuple[int, float]]]) -> str:
    lines = ["scheme,order,budget,mean_stretch"]
    for (scheme, order), pts in curves.items():
        lines.extend(f"{scheme},{order},{b},{m!r}" for b, m in pts)
    return "\n".join(lines) + "\n"


def emit(reports: list[StretchReport], fmt: str, path: str | Path | None = None) -> str:
    """Render reports as ``csv`` (per-pair rows) or ``summary-text``; optionally write to ``path``."""
    if fmt == "csv":
        doc = pairs_csv(reports)
    elif fmt == "summary-text":
        doc = summary_text(reports)
    else:
        raise ExperimentError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(doc)
    return doc


def load_pairs_csv(text: str) -> list[StretchReport]:
    """Rebuild reports (rows and summaries) from :func:`pairs_csv` output."""
    lines = text.splitlines()
    if not lines or lines[0] != PAIR_CSV_HEADER:
        raise ExperimentError("not a per-pair CSV")
    code = {b.value: b.code for b in Branch}
    grouped: dict[str, dict[int, list[list[str]]]] = {}
    for line in lines[1:]:
        f = line.split(",")
        grouped.setdefault(f[0], {}).setdefault(int(f[1]), []).append(f)
    reports = []
    for scheme, seeds in grouped.items():
        rep = StretchReport(scheme, Summary(), {}, {})
        for seed, recs in seeds.items():
            u = np.array([int(r[2]) for r in recs], dtype=np.int64)
            has_vic = recs[0][8] != ""
            rows = PairRows(
                u,
                np.array([int(r[3]) for r in recs], dtype=np.int64),
                np.array([float(r[4]) for r in recs]),
                np.array([float(r[5]) for r in recs]),
                np.array([float(r[6]) for r in recs]),
                np.array([code[r[7]] for r in recs], dtype=np.int8),
                np.array([r[8] == "1" for r in recs]) if has_vic else None,
            )
            rep.rows[seed] = rows
            summ = rep.per_seed.setdefault(seed, Summary())
            cuts = np.flatnonzero(np.diff(u)) + 1
            for part in np.split(np.arange(u.size), cuts):
                vic = rows.vicinity[part] if rows.vicinity is not None else None
                args = (rows.d[part], rows.estimate[part], rows.stretch[part], vic)
                summ.add(*args)
                rep.summary.add(*args)
        reports.append(rep)
    return reports
