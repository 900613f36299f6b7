from __future__ import annotations

import pytest

from sparse_oracles.graph import Graph, gen_gnm
from sparse_oracles.reduction import (
    copy_count,
    degree_proportional_probability,
    distance_preservation_check,
    read_copies,
    reduce,
    write_copies,
)


def check_structure(g: Graph, rg) -> None:
    gd, delta = rg.gd, rg.delta
    assert all(gd.degree(x) <= delta + 2 for x in range(gd.n))
    for v, chain in enumerate(rg.copies):
        assert len(chain) == copy_count(g.degree(v), delta)
        assert all(rg.origin[x] == v for x in chain)
        for a, b in zip(chain, chain[1:]):
            assert gd.weight(a, b) == 0.0
    # every copy except the last carries exactly delta original edges
    for v, chain in enumerate(rg.copies):
        loads = [sum(1 for y in gd.adj[x] if rg.origin[y] != v) for x in chain]
        assert all(n == delta for n in loads[:-1]) and loads[-1] <= delta
        assert sum(loads) == g.degree(v)


def test_star_expands_center(star5):
    rg = reduce(star5, 2)
    assert rg.gd.n == 6
    assert rg.copies[0] == (0, 1)
    c0, c1 = rg.copies[0]
    assert rg.gd.weight(c0, c1) == 0.0
    assert sorted(rg.gd.adj[c0]) == [c1, *[rg.copies[i][0] for i in (1, 2)]]
    assert sorted(rg.gd.adj[c1]) == [c0, *[rg.copies[i][0] for i in (3, 4)]]
    check_structure(star5, rg)
    assert distance_preservation_check(star5, rg) == 0


def test_path_unchanged(p5):
    rg = reduce(p5, 2)
    assert rg.gd == p5
    assert rg.copies == tuple((v,) for v in range(5))
    assert distance_preservation_check(p5, reduce(p5, 1)) == 0


def test_large_delta_is_identity(small_graphs):
    g = small_graphs[0]
    rg = reduce(g, g.max_degree)
    assert rg.gd == g


def test_single_edge():
    g = Graph(2, [(0, 1, 3.0)])
    assert distance_preservation_check(g, reduce(g, 1)) == 0


@pytest.mark.parametrize("delta", [1, 2, 4])
@pytest.mark.parametrize("seed", range(50))
def test_random_graphs_preserve_distances(seed, delta):
    n = 96 + seed
    g = gen_gnm(n, n * delta // 2, seed)
    rg = reduce(g, delta)
    assert distance_preservation_check(g, rg) == 0
    assert rg.gd.n <= 2 * g.n
    check_structure(g, rg)


def test_reject_bad_delta(p5):
    with pytest.raises(ValueError):
        reduce(p5, 0)


def test_degree_proportional_probability(star5):
    assert degree_proportional_probability(0, star5, 4, 4) == 0.25
    g = Graph(8, [(0, i, 1.0) for i in range(1, 8)])
    assert degree_proportional_probability(0, g, 2, 2) == 1.0
    assert degree_proportional_probability(1, g, 10, 6) == 0.1


def test_copies_sidecar_round_trip(tmp_path, star5):
    rg = reduce(star5, 2)
    write_copies(rg, tmp_path / "copies.txt")
    assert (tmp_path / "copies.txt").read_text().splitlines()[0] == "0 0 1"
    assert read_copies(tmp_path / "copies.txt") == rg.copies
