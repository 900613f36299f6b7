from __future__ import annotations

import pytest

from sparse_oracles.oracles.additive import build_additive, query_additive
from sparse_oracles.oracles.mult import build_mult, query_mult
from sparse_oracles.oracles.stretch2 import build_stretch2, query2
from sparse_oracles.serialize import MAGIC, FormatError, dump_oracle, load_oracle, read_oracle, save_oracle
from sparse_oracles.tz import tz_build, tz_query


def builds(g):
    return [
        (tz_build(g, 2, 1), lambda o, u, v: tz_query(o, u, v).estimate),
        (tz_build(g, 1, 1), lambda o, u, v: tz_query(o, u, v).estimate),
        (build_stretch2(g, 6.0, "onfly", 1), query2),
        (build_stretch2(g, 6.0, "stored", 1, strict=True), query2),
        (build_mult(g, 6.0, 2, "onfly", 1), query_mult),
        (build_mult(g, 6.0, 1, "stored", 1), query_mult),
        (build_additive(g, 6.0, "two_plus", 1), query_additive),
        (build_additive(g, 6.0, "fourk_plus", 1, k=2), query_additive),
    ]


def test_round_trip_preserves_answers_and_bytes(small_graphs, tmp_path):
    g = small_graphs[7]
    for i, (o, q) in enumerate(builds(g)):
        blob = dump_oracle(o)
        assert blob[:4] == MAGIC
        back = load_oracle(blob)
        assert type(back) is type(o)
        assert dump_oracle(back) == blob
        assert back.size_entries == o.size_entries
        for u in range(0, g.n, 9):
            for v in range(0, g.n, 4):
                assert q(back, u, v) == q(o, u, v)
        save_oracle(o, tmp_path / f"o{i}.bin")
        assert dump_oracle(read_oracle(tmp_path / f"o{i}.bin")) == blob


def test_rebuild_is_byte_identical(small_graphs):
    g = small_graphs[2]
    first = [dump_oracle(o) for o, _ in builds(g)]
    assert first == [dump_oracle(o) for o, _ in builds(g)]


def test_corrupt_containers_rejected(small_graphs):
    blob = dump_oracle(tz_build(small_graphs[0], 2, 0))
    with pytest.raises(FormatError):
        load_oracle(b"XXXX" + blob[4:])
    with pytest.raises(FormatError):
        load_oracle(blob[:4] + b"\x09\x00" + blob[6:])
    with pytest.raises(FormatError):
        load_oracle(blob + b"\x00")
    with pytest.raises(TypeError):
        dump_oracle(object())
