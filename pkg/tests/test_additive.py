from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from conftest import L1, L2, U, V, random_weighted, small_connected
from sparse_oracles.graph import exact_oracle, heaviest_edges
from sparse_oracles.landmarks import BuildError, LandmarkContext, sample_landmarks
from sparse_oracles.oracles.additive import (
    build_additive,
    query_additive,
    query_additive_row,
    retrieve_path_additive,
    size_bound,
)
from sparse_oracles.oracles.common import Branch


def forced(g, ids, mode="two_plus", k=1):
    return build_additive(g, 1.0, mode, 0, k=k, landmarks=sample_landmarks(g, "forced", forced=ids))


def test_path_fixture(p5, p5_landmarks):
    o = forced(p5, [2])
    ctx = LandmarkContext.build(p5, p5_landmarks, with_vicinities=False)
    assert [b.ball for b in o.balls] == [b.ball for b in ctx.balls]
    q = query_additive(o, 0, 1)
    assert (q.estimate, q.branch) == (1, Branch.DIRECT_BALL)
    q = query_additive(o, 0, 4)
    assert q.estimate == 4 and q.branch is Branch.LANDMARK_U
    assert retrieve_path_additive(o, q, 0, 4) == [0, 1, 2, 3, 4]


def test_tight_fixture(w5):
    o = forced(w5, [L1, L2])
    q = query_additive(o, U, V)
    assert q.estimate == 4
    d, pred = exact_oracle(w5, return_predecessors=True)
    w = heaviest_edges(w5, pred)
    assert w[U, V] == 1 and q.estimate <= 2 * d[U, V] + w[U, V]
    o4 = forced(w5, [L1, L2], "fourk_plus")
    assert o4.metric.estimate(L1, L2) == 4
    assert query_additive(o4, U, V).estimate == 6


def test_errors(p5):
    with pytest.raises(ValueError):
        build_additive(p5, 2.0, "three_plus")
    with pytest.raises(BuildError):
        build_additive(p5, 2.0, "fourk_plus", k=0)


@given(st.integers(0, 10_000), st.sampled_from([("two_plus", 1), ("fourk_plus", 1), ("fourk_plus", 2)]), st.sampled_from([2.0, 5.0]))
def test_query_properties(seed, mode_k, alpha):
    mode, k = mode_k
    g = random_weighted(seed)
    if not g.connected:
        return
    o = build_additive(g, alpha, mode, seed, k=k)
    d, pred = exact_oracle(g, return_predecessors=True)
    w = heaviest_edges(g, pred)
    r = o.radius
    for u in range(g.n):
        for v in range(g.n):
            q = query_additive(o, u, v, with_path=True)
            bound = 2 * d[u, v] + w[u, v] if mode == "two_plus" else (4 * k - 1) * d[u, v] + 2 * k * w[u, v]
            assert d[u, v] * (1 - 1e-12) <= q.estimate <= bound * (1 + 1e-12) + 1e-12
            if d[u, v] < r[u] + r[v] - w[u, v]:
                assert q.estimate == pytest.approx(d[u, v], rel=1e-12)
            assert q.probes <= len(o.balls[u].ball) + 2
            assert g.path_weight(q.path) == pytest.approx(q.estimate, rel=1e-12)


def test_unweighted_two_plus_one():
    for s in range(10):
        g = small_connected(s, n=80, m=200)
        o = build_additive(g, 4.0, "two_plus", s)
        d = exact_oracle(g)
        for u in range(g.n):
            for v in range(g.n):
                assert query_additive(o, u, v).estimate <= 2 * d[u, v] + 1


def test_rows_match_pairwise_queries(small_graphs):
    for g in small_graphs[::2]:
        for mode, k in (("two_plus", 1), ("fourk_plus", 2)):
            o = build_additive(g, 5.0, mode, 3, k=k)
            idx = o.index()
            for u in range(0, g.n, 5):
                row = query_additive_row(o, u, idx)
                for v in range(g.n):
                    assert row.result(v) == query_additive(o, u, v)


def test_size_accounting(small_graphs):
    g = small_graphs[0]
    o = build_additive(g, 4.0, "two_plus", 0)
    assert o.size_entries == sum(len(b.ball) for b in o.balls) + 2 * g.n + o.table.size
    assert size_bound(g.n, 4.0, "two_plus", 1) == 4 * (g.n * 4 + g.n**2 / 4)
    assert size_bound(g.n, 4.0, "fourk_plus", 2) == 4 * (g.n * 4 + (g.n / 4) ** 1.5)
