"""Acceptance suite: one printed pass/fail line per criterion (see the terminal summary)."""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

import corpus as C
from conftest import L1, L2, U, V, record
from sparse_oracles import evaluation as ev
from sparse_oracles import routing as rt
from sparse_oracles.cli import main as cli_main
from sparse_oracles.graph import Graph, exact_oracle, gen_gnm, write_graph
from sparse_oracles.landmarks import LandmarkContext, sample_landmarks, sampling_probabilities
from sparse_oracles.oracles import additive as add
from sparse_oracles.oracles import mult, stretch2
from sparse_oracles.oracles.mult import query_mult
from sparse_oracles.oracles.stretch2 import query2
from sparse_oracles.reduction import distance_preservation_check, reduce
from sparse_oracles.serialize import dump_oracle
from sparse_oracles.tz import tz_build

pytestmark = pytest.mark.slow


def configs():
    for name, g in C.corpus():
        yield name, g, C.exact(g)


def summarize(t: C.Tally, names: list[str]) -> tuple[bool, str]:
    ok = all(t.bad.get(n, 0) == 0 for n in names) and all(t.pairs.get(n, 0) > 0 or n.startswith("additive2_unw") for n in names)
    detail = ", ".join(f"{n} {t.bad.get(n, 0)}/{t.pairs.get(n, 0)}" for n in names)
    return ok, detail


@pytest.fixture(scope="module")
def stretch2_tally():
    t = C.Tally()
    for name, g in C.corpus():
        start = time.perf_counter()
        ex = C.exact(g)
        t.seconds += time.perf_counter() - start
        for alpha in C.ALPHAS:
            for seed in C.SEEDS:
                C.check_stretch2(g, ex, alpha, seed, f"{name} a={alpha} s={seed}", t)
    return t, t.seconds


@pytest.fixture(scope="module")
def additive_tally():
    t = C.Tally()
    for name, g, ex in configs():
        for alpha in C.ALPHAS:
            for seed in C.SEEDS:
                C.check_additive(g, ex, alpha, seed, f"{name} a={alpha} s={seed}", t)
    return t


def test_criterion_01_stretch2_sound(stretch2_tally):
    t, secs = stretch2_tally
    ok, detail = summarize(t, ["stretch2_upper", "stretch2_lower", "row_matches_query2"])
    ok = ok and secs < 300
    record(1, ok, f"{detail}; soundness pass {secs:.0f}s (target < 300s)")
    assert ok, t.notes


def test_criterion_02_exact_when_close(stretch2_tally):
    t, _ = stretch2_tally
    ok, detail = summarize(t, ["exact_when_close"])
    record(2, ok, detail)
    assert ok, t.notes


def test_criterion_03_intersection_radius_bounds(stretch2_tally):
    t, _ = stretch2_tally
    ok, detail = summarize(t, ["radius_bound_ball_vicinity", "radius_bound_ball_ball"])
    record(3, ok, detail)
    assert ok, t.notes


def test_criterion_04_mult(w5):
    t = C.Tally()
    for name, g, ex in configs():
        for alpha in C.ALPHAS:
            for seed in C.SEEDS:
                for k in (1, 2):
                    C.check_mult(g, ex, alpha, seed, k, f"{name} a={alpha} s={seed} k={k}", t)
    ok, detail = summarize(t, ["mult_k1_upper", "mult_k1_lower", "mult_k2_upper", "mult_k2_lower", "row_matches_query_mult"])
    L = sample_landmarks(w5, "forced", forced=[L1, L2])
    d = exact_oracle(w5)[U, V]
    s2 = query2(stretch2.build_stretch2(w5, 1.0, landmarks=L), U, V).estimate / d
    s3 = query_mult(mult.build_mult(w5, 1.0, 1, landmarks=L), U, V).estimate / d
    ok = ok and s2 == 2.0 and s3 == 3.0
    record(4, ok, f"{detail}; tight cases stretch {s2} and {s3}")
    assert ok, t.notes


def test_criterion_05_additive(additive_tally):
    t = additive_tally
    names = [
        "additive2_upper",
        "additive2_lower",
        "additive4k_k1_upper",
        "additive4k_k1_lower",
        "additive4k_k2_upper",
        "additive4k_k2_lower",
        "additive2_unweighted_2d_plus_1",
        "row_matches_query_additive",
    ]
    ok, detail = summarize(t, names)
    ok = ok and t.pairs.get("additive2_unweighted_2d_plus_1", 0) > 0
    record(5, ok, detail)
    assert ok, t.notes


def test_criterion_06_tz():
    t = C.Tally()
    for name, g, ex in configs():
        for seed in C.SEEDS:
            C.check_tz(g, ex, seed, f"{name} s={seed}", t)
    names = [f"tz_k{k}_{side}" for k in (1, 2, 3) for side in ("upper", "lower")] + ["tz_k1_exact"]
    ok, detail = summarize(t, names)
    record(6, ok, detail)
    assert ok, t.notes


def test_criterion_07_reduction():
    worst, over, runs = 0.0, 0, 0
    for i in range(50):
        for delta in (1, 2, 4):
            n = 96 + i
            g = gen_gnm(n, n * delta // 2, 7000 + i)
            rg = reduce(g, delta)
            worst = max(worst, distance_preservation_check(g, rg))
            over += rg.gd.n > 2 * n
            runs += 1
    ok = worst == 0 and over == 0
    record(7, ok, f"max discrepancy {worst}, |V_delta| > 2n in {over}/{runs} runs")
    assert ok


def test_criterion_08_sizes():
    worst: dict[str, float] = {}
    bad_l, bad_ball = [], []
    alpha = 32.0

    def audit(name: str, size: int, bound: float) -> None:
        worst[name] = max(worst.get(name, 0.0), size / bound)

    for seed in range(50):
        g = ev.topology_graph("gnm(1024, 3072)", seed)
        for variant in ("onfly", "stored"):
            o = stretch2.build_stretch2(g, alpha, variant, seed, size_constant=None)
            audit(f"stretch2_{variant}", o.size_entries, stretch2.size_bound(g, alpha, variant, 4.0))
        for k in (1, 2):
            o = mult.build_mult(g, alpha, k, "onfly", seed, size_constant=None)
            audit(f"mult_k{k}", o.size_entries, mult.size_bound(g, alpha, k, "onfly", 4.0))
        for mode, k in (("two_plus", 1), ("fourk_plus", 1), ("fourk_plus", 2)):
            o = add.build_additive(g, alpha, mode, seed, k=k, size_constant=None)
            audit(f"{mode}_k{k}", o.size_entries, add.size_bound(g.n, alpha, mode, k, 4.0))
        L = sample_landmarks(g, "uniform", alpha, seed)
        p = sampling_probabilities(g, "uniform", alpha)
        mu, sigma = p.sum(), math.sqrt(float(np.sum(p * (1 - p))))
        if abs(len(L) - mu) > 4 * sigma:
            bad_l.append((seed, len(L)))
        balls = LandmarkContext.build(g, L, with_vicinities=False).balls
        mean_ball = float(np.mean([len(b.ball) for b in balls]))
        if mean_ball > 3 * alpha:
            bad_ball.append((seed, mean_ball))
    ok = max(worst.values()) <= 1.0 and not bad_l and not bad_ball
    ratios = " ".join(f"{k}={v:.3f}" for k, v in worst.items())
    record(8, ok, f"max size/(4*formula): {ratios}; |L| outside 4 sigma {len(bad_l)}/50; mean ball > 3 alpha {len(bad_ball)}/50")
    assert ok, (worst, bad_l, bad_ball)


def test_criterion_09_scaled_ordering():
    start = time.perf_counter()
    e = ev.Experiment(
        "gnm(4096, 12288)",
        ("rear", "tz_degree_sampled(2)", "tz(2)"),
        64.0,
        tuple(range(10)),
        pair_sampling="sources(1/16)",
        sampling="paper-eval",
    )
    rear, tzd, tz = ev.run_experiment(e, keep_rows=False)
    secs = time.perf_counter() - start
    good = [s for s in e.seeds if rear.per_seed[s].fraction_exact > tzd.per_seed[s].fraction_exact > tz.per_seed[s].fraction_exact]
    ok = len(good) >= 9 and secs < 900 and ev.bound_violations([rear, tzd, tz]) == 0
    fe = lambda r: r.summary.fraction_exact
    record(
        9,
        ok,
        f"ordering rear > tz_degree_sampled > tz in {len(good)}/10 seeds; fraction_exact "
        f"rear {fe(rear):.4f} tz_degree_sampled {fe(tzd):.4f} tz {fe(tz):.4f}; {secs:.0f}s (target < 900s)",
    )
    assert ok


def test_criterion_10_routing():
    t = C.Tally()
    for name, g, ex in configs():
        for alpha in C.ALPHAS:
            for seed in C.SEEDS:
                C.check_routing(g, ex, alpha, seed, f"{name} a={alpha} s={seed}", t)
    names = ["routing_conservation", "handshake_stretch", "handshake_packets", "handshake_path_weight", "probe_monotone", "probe_full_budget"]
    ok, detail = summarize(t, names)
    record(10, ok, detail)
    assert ok, t.notes


def test_criterion_11_determinism(tmp_path):
    failures = []
    for name, g in C.corpus()[:: 10]:
        for seed in (0, 3):
            builds = {
                "stretch2": lambda: stretch2.build_stretch2(g, 16.0, "stored", seed),
                "mult": lambda: mult.build_mult(g, 16.0, 2, "onfly", seed),
                "additive2": lambda: add.build_additive(g, 16.0, "two_plus", seed),
                "additive4k": lambda: add.build_additive(g, 16.0, "fourk_plus", seed, k=2),
                "tz": lambda: tz_build(g, 3, seed),
            }
            for kind, make in builds.items():
                if dump_oracle(make()) != dump_oracle(make()):
                    failures.append(f"{kind} {name} s={seed}")
    e = ev.Experiment("gnm(128, 384)", ("rear", "rear_opt", "res(2)", "tz(2)", "additive2", "additive4k(2)"), 8.0, (0, 1))
    if ev.pairs_csv(ev.run_experiment(e)) != ev.pairs_csv(ev.run_experiment(e)):
        failures.append("eval csv")
    g = ev.topology_graph("geometric(200, 6)", 2)

    def flows() -> str:
        net = rt.deploy(g, None, 2)
        return rt.flows_csv([rt.handshake(net, s, d) for s, d in rt.sample_flows(g.n, 64, 2)])

    if flows() != flows():
        failures.append("routing csv")
    gpath = tmp_path / "g.txt"
    write_graph(g, gpath)
    for scheme in ("stretch2", "mult", "additive2", "additive4k", "tz"):
        outs = [tmp_path / f"{scheme}{i}.bin" for i in range(2)]
        for out in outs:
            cli_main(["build", str(gpath), "--scheme", scheme, "--seed", "5", "--out", str(out)])
        if outs[0].read_bytes() != outs[1].read_bytes():
            failures.append(f"cli build {scheme}")
    cfg = tmp_path / "e.toml"
    cfg.write_text('topology = "gnm(96, 288)"\nschemes = ["rear", "tz(2)"]\nalpha = 6\nseeds = 2\n')
    outs = [tmp_path / f"e{i}.csv" for i in range(2)]
    for out in outs:
        cli_main(["eval", str(cfg), "--format", "csv", "--out", str(out)])
    if outs[0].read_bytes() != outs[1].read_bytes():
        failures.append("cli eval csv")
    ok = not failures
    record(11, ok, "byte-identical reruns for oracle dumps, eval CSV, routing CSV, CLI build and eval" if ok else f"differs: {failures}")
    assert ok


def test_criterion_12_probe_bounds(stretch2_tally, additive_tally):
    t = C.Tally()
    t.merge(stretch2_tally[0])
    t.merge(additive_tally)
    ok, detail = summarize(t, ["probes_query2", "probes_additive"])
    record(12, ok, detail)
    assert ok, t.notes
