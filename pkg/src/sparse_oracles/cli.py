"""``sparse-oracles`` command line: gen, build, query, eval and routesim."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import evaluation as ev
from .config import ConfigError, experiment_from_config, read_config, scenario_from_config
from .graph import GraphError, connected_instance, gen_geometric, gen_gnm, read_graph, write_graph
from .landmarks import BuildError, read_landmarks, sample_landmarks
from .oracles.additive import AdditiveOracle, build_additive, query_additive, retrieve_path_additive
from .oracles.common import QUERY_CSV_HEADER, Branch, QueryResult
from .oracles.mult import MultOracle, build_mult, query_mult, query_mult_optimized, retrieve_path_mult
from .oracles.stretch2 import Stretch2Oracle, build_stretch2, query2, query2_optimized, retrieve_path2
from .serialize import FormatError, read_oracle, save_oracle
from .tz import TZOracle, tz_build, tz_query

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BOUND = 0, 1, 2, 3
SCHEMES = ("stretch2", "mult", "additive2", "additive4k", "tz")
DATA_ERRORS = (GraphError, BuildError, FormatError, ConfigError, ev.ExperimentError, OSError, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors exit with 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _globals() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=None, help="random seed (default 0; overrides config seeds)")
    g.add_argument("--alpha", type=float, default=None, help="space/time trade-off parameter")
    g.add_argument("--k", type=int, default=None, help="sub-oracle level count (default 1; tz default 2)")
    g.add_argument("--variant", choices=("onfly", "stored"), default=None)
    g.add_argument("--sampling", choices=ev.PROFILES, default=None)
    g.add_argument("--strict-paper", action="store_true", help="literal asymmetric intersection (no fallback comparison)")
    g.add_argument("--no-exact", action="store_true", help="skip exact-distance verification")
    g.add_argument("--out", default=None, help="output path (default stdout where possible)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _globals()
    p = _Parser(prog="sparse-oracles", description="Approximate distance oracles for sparse graphs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", parents=[common], help="generate a graph as an edge list")
    gen.add_argument("kind", choices=("gnm", "geometric"))
    gen.add_argument("n", type=int)
    gen.add_argument("size", type=float, help="edge count m (gnm) or target average degree (geometric)")
    gen.add_argument("--connected", action="store_true", help="retry later seeds until the graph is connected")

    build = sub.add_parser("build", parents=[common], help="build an oracle into a binary container")
    build.add_argument("graph")
    build.add_argument("--scheme", choices=SCHEMES, default="stretch2")
    build.add_argument("--landmarks", default=None, help="file of landmark ids (one per line) to use instead of sampling")

    query = sub.add_parser("query", parents=[common], help="query one pair from a built oracle")
    query.add_argument("oracle")
    query.add_argument("u", type=int)
    query.add_argument("v", type=int)
    query.add_argument("--optimized", action="store_true", help="apply the shortcut optimisation")
    query.add_argument("--path", action="store_true", help="also print the retrieved walk")

    evp = sub.add_parser("eval", parents=[common], help="run an experiment config")
    evp.add_argument("config")
    evp.add_argument("--format", choices=("summary-text", "csv"), default="summary-text")
    evp.add_argument("--cdf", default=None, help="also write the CDF table as CSV here")
    evp.add_argument("--curves", default=None, help="also write stretch-vs-probe curves as CSV here")
    evp.add_argument("--vicinity-intersection", action="store_true", help="intersect vicinities with vicinities")

    rs = sub.add_parser("routesim", parents=[common], help="simulate routing flows from a scenario config")
    rs.add_argument("config")
    rs.add_argument("--curves", default=None, help="also write probe curves as CSV here")
    return p


def _write(doc: str | bytes, out: str | None) -> None:
    if out is None:
        if isinstance(doc, bytes):
            raise UsageError("binary output needs --out")
        sys.stdout.write(doc)
    elif isinstance(doc, bytes):
        Path(out).write_bytes(doc)
    else:
        Path(out).write_text(doc)


def _landmark_mode(scheme: str, profile: str | None) -> str:
    if profile is None:
        return "uniform" if scheme.startswith("additive") else "degree"
    if profile == "paper-eval":
        return "paper-uniform" if scheme in ("additive2", "additive4k", "tz") else "paper-degree"
    return profile


def cmd_gen(a) -> int:
    seed = a.seed or 0
    if a.kind == "gnm":
        make = lambda s: gen_gnm(a.n, int(a.size), s)
    else:
        make = lambda s: gen_geometric(a.n, a.size, s)
    g = connected_instance(make, seed)[0] if a.connected else make(seed)
    if not g.connected:
        print("warning: generated graph is disconnected", file=sys.stderr)
    if a.out is None:
        from .graph import dump_graph

        sys.stdout.write(dump_graph(g))
    else:
        write_graph(g, a.out)
    return EXIT_OK


def cmd_build(a) -> int:
    if a.out is None:
        raise UsageError("build needs --out")
    g = read_graph(a.graph)
    seed = a.seed or 0
    mode = _landmark_mode(a.scheme, a.sampling)
    L = None
    if a.landmarks is not None:
        L = sample_landmarks(g, "forced", 1.0, seed, forced=read_landmarks(a.landmarks))
    alpha = a.alpha if a.alpha is not None else max(1.0, g.n ** 0.5)
    variant = a.variant or "onfly"
    if a.scheme == "stretch2":
        o = build_stretch2(g, alpha, variant, seed, sampling=mode, landmarks=L, strict=a.strict_paper)
    elif a.scheme == "mult":
        o = build_mult(g, alpha, a.k or 1, variant, seed, sampling=mode, landmarks=L, strict=a.strict_paper)
    elif a.scheme in ("additive2", "additive4k"):
        kind = "two_plus" if a.scheme == "additive2" else "fourk_plus"
        o = build_additive(g, alpha, kind, seed, k=a.k or 1, sampling=mode, landmarks=L)
    else:
        first = L.ids.tolist() if L is not None else None
        o = tz_build(g, a.k or 2, seed, first_level=first)
    save_oracle(o, a.out)
    print(f"{type(o).__name__} n={g.n} size_entries={o.size_entries}", file=sys.stderr)
    return EXIT_OK


def cmd_query(a) -> int:
    o = read_oracle(a.oracle)
    n = o.n
    if not (0 <= a.u < n and 0 <= a.v < n):
        raise UsageError(f"node ids must lie in [0, {n})")
    path = None
    if isinstance(o, TZOracle):
        t = tz_query(o, a.u, a.v)
        qr = QueryResult(t.estimate, Branch.TZ, t.final_witness, t.level_used)
    elif isinstance(o, Stretch2Oracle):
        qr = (query2_optimized if a.optimized else query2)(o, a.u, a.v)
        path = retrieve_path2(o, qr, a.u, a.v) if a.path else None
    elif isinstance(o, MultOracle):
        qr = (query_mult_optimized if a.optimized else query_mult)(o, a.u, a.v)
        path = retrieve_path_mult(o, qr, a.u, a.v) if a.path else None
    else:
        assert isinstance(o, AdditiveOracle)
        qr = query_additive(o, a.u, a.v)
        path = retrieve_path_additive(o, qr, a.u, a.v) if a.path else None
    doc = QUERY_CSV_HEADER + "\n" + qr.csv_row(a.u, a.v) + "\n"
    if path is not None:
        doc += "path," + " ".join(map(str, path)) + "\n"
    _write(doc, a.out)
    return EXIT_OK


def cmd_eval(a) -> int:
    overrides = dict(
        alpha=a.alpha,
        seeds=(a.seed,) if a.seed is not None else None,
        sampling=a.sampling,
        variant=a.variant,
        strict=True if a.strict_paper else None,
        exact=False if a.no_exact else None,
        intersection="vicinity" if a.vicinity_intersection else None,
    )
    e, budgets = experiment_from_config(read_config(a.config), **overrides)
    reports = ev.run_experiment(e, keep_rows=a.format == "csv")
    _write(ev.emit(reports, a.format), a.out)
    if a.cdf is not None:
        Path(a.cdf).write_text(ev.cdf_csv(reports))
    if a.curves is not None and budgets:
        Path(a.curves).write_text(ev.curves_csv(ev.stretch_vs_probes(e, budgets)))
    bad = ev.bound_violations(reports)
    if bad:
        print(f"self-check: {bad} pairs outside the proven stretch bound", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


def cmd_routesim(a) -> int:
    from . import routing as rt

    sc = scenario_from_config(
        read_config(a.config), alpha=a.alpha, seeds=(a.seed,) if a.seed is not None else None, sampling=a.sampling
    )
    sampling = "paper-degree" if sc.sampling == "paper-eval" else sc.sampling
    flows, curves = [], {o: {} for o in rt.ORDERS}
    bad = 0
    for seed in sc.seeds:
        g = ev.topology_graph(sc.topology, seed)
        net = rt.deploy(g, sc.alpha, seed, sampling=sampling, mtu=sc.mtu, id_bytes=sc.id_bytes)
        print(f"seed {seed}: max_entries={net.max_entries} mean_entries={net.mean_entries:.1f}", file=sys.stderr)
        exact = None if a.no_exact else ev.exact_oracle
        batch = []
        for s, t in rt.sample_flows(g.n, sc.flows, seed):
            d = exact(g, sources=[s])[0, t] if exact is not None else None
            f = rt.handshake(net, s, t, d)
            bad += int(d is not None and f.final_stretch > 2 * (1 + ev.REL_TOL))
            batch.append(f)
        flows.extend(batch)
        for order in rt.ORDERS:
            for b, m in rt.probe_curve(net, batch, order, list(sc.budgets)):
                curves[order].setdefault(b, []).append(m)
    _write(rt.flows_csv(flows), a.out)
    if a.curves is not None:
        lines = ["order,budget,mean_stretch"]
        for order, pts in curves.items():
            lines.extend(f"{order},{b},{sum(ms) / len(ms)!r}" for b, ms in pts.items())
        Path(a.curves).write_text("\n".join(lines) + "\n")
    if bad:
        print(f"self-check: {bad} flows above stretch 2", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "build": cmd_build, "query": cmd_query, "eval": cmd_eval, "routesim": cmd_routesim}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 1
        return int(exc.code or 0)
    try:
        return COMMANDS[a.command](a)
    except UsageError as exc:
        print(f"sparse-oracles: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"sparse-oracles: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
