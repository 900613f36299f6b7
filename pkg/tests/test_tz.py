from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_weighted, small_connected
from sparse_oracles.graph import Graph, exact_oracle
from sparse_oracles.landmarks import BuildError
from sparse_oracles.tz import (
    ClusterIndex,
    bunch_brute_force,
    forward,
    sample_levels,
    tz_build,
    tz_matrix,
    tz_query,
    tz_route,
    tz_routing_tables,
    tz_row,
)


def test_k1_stores_all_pairs(p5):
    o = tz_build(p5, 1, 0)
    for v in range(5):
        assert o.bunches[v] == {w: float(abs(v - w)) for w in range(5)}
    assert tz_query(o, 0, 4).estimate == 4


def test_single_edge_exact():
    g = Graph(2, [(0, 1, 2.5)])
    for k in (1, 2, 3):
        assert tz_query(tz_build(g, k, 0), 0, 1).estimate == 2.5


def test_identity_query(small_graphs):
    o = tz_build(small_graphs[0], 2, 3)
    assert all(tz_query(o, x, x).estimate == 0 for x in range(o.n))


def test_disconnected_rejected():
    with pytest.raises(BuildError):
        tz_build(Graph(3, [(0, 1, 1.0)]), 2, 0)


def test_level_sampling():
    level = sample_levels(100, 3, 4)
    assert level.max() == 2
    assert sample_levels(100, 3, 4).tolist() == level.tolist()
    forced = sample_levels(10, 2, 0, first_level=[3, 7])
    assert np.flatnonzero(forced >= 1).tolist() == [3, 7]
    with pytest.raises(ValueError):
        sample_levels(10, 0, 0)


def test_bunch_size_scaling():
    from sparse_oracles.evaluation import topology_graph

    g = topology_graph("gnm(1024, 3072)", 0)
    sizes = [sum(len(b) for b in tz_build(g, 2, s).bunches) for s in range(100)]
    assert np.mean(sizes) <= 8 * g.n**1.5


@pytest.mark.parametrize("seed", range(50))
def test_stretch_sandwich_k2(seed):
    g = small_connected(seed, n=96, m=240, weighted=seed % 2 == 1)
    d = exact_oracle(g)
    est = tz_matrix(tz_build(g, 2, seed))
    assert np.all(est >= d * (1 - 1e-12))
    assert np.all(est <= 3 * d * (1 + 1e-12))


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_structure_invariants(seed, k):
    g = random_weighted(seed)
    if not g.connected:
        return
    o = tz_build(g, k, seed)
    d = exact_oracle(g)
    assert np.all(o.witness[0] == np.arange(g.n)) and np.all(o.witness_dist[0] == 0)
    assert np.all(np.diff(o.witness_dist, axis=0) >= 0)
    assert np.any(o.level_of == k - 1)
    assert [dict(sorted(b.items())) for b in o.bunches] == bunch_brute_force(d, o.level_of, k)
    for v in range(g.n):
        for i in range(k):
            assert o.witness_dist[i, v] == d[v, o.witness[i, v]]
    est = tz_matrix(o)
    assert np.all(est >= d * (1 - 1e-12)) and np.all(est <= (2 * k - 1) * d * (1 + 1e-12))
    if k == 1:
        assert np.array_equal(est, d)


def test_row_matches_query(small_graphs):
    for g in small_graphs[:4]:
        for k in (1, 2, 3):
            o = tz_build(g, k, 11)
            ci = ClusterIndex(o)
            for u in range(0, g.n, 7):
                row = tz_row(o, u, ci)
                assert row.tolist() == [tz_query(o, u, v).estimate for v in range(g.n)]


def test_determinism(small_graphs):
    g = small_graphs[5]
    a, b = tz_build(g, 3, 9), tz_build(g, 3, 9)
    assert a.bunches == b.bunches and np.array_equal(a.witness, b.witness)


def test_routing_tables_path(p5):
    o = tz_build(p5, 1, 0)
    t = tz_routing_tables(o, p5)
    assert t[0][4] == 1
    assert forward(t, 0, 4) == [0, 1, 2, 3, 4]


def test_single_node_has_empty_tables():
    o = tz_build(Graph(1, []), 1, 0)
    assert tz_routing_tables(o) == [{}]


@pytest.mark.parametrize("seed", range(20))
def test_table_forwarding_reproduces_estimates(seed):
    g = small_connected(seed, n=80, m=200, weighted=seed % 2 == 0)
    k = 2 + seed % 2
    o = tz_build(g, k, seed)
    t = tz_routing_tables(o, g)
    for src in range(g.n):
        for dst in range(0, g.n, 3):
            path, trace = tz_route(o, t, src, dst)
            assert path[0] == src and path[-1] == dst
            assert g.path_weight(path) == pytest.approx(trace.estimate, rel=1e-12)
            assert trace.estimate == tz_query(o, dst, src).estimate
