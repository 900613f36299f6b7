from __future__ import annotations

import numpy as np

from sparse_oracles import rng


def test_reference_vector():
    assert rng.Stream(0, 0).raw(4).tolist() == [
        213000021201967259,
        4455796210202625458,
        2055444239878205049,
        10411612076246414556,
    ]


def test_uniforms_and_integers_are_derived_from_raw():
    raw = rng.Stream(5, 9).raw(100)
    u = rng.Stream(5, 9).uniforms(100)
    assert np.array_equal(u, (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53)
    ints = rng.Stream(5, 9).integers(7, 100)
    assert ints.min() >= 0 and ints.max() < 7
    assert np.array_equal(ints, np.floor(u * 7).astype(np.int64))


def test_streams_are_independent_by_id():
    a = rng.Stream(1, rng.stream_id(rng.LANDMARKS)).raw(8)
    b = rng.Stream(1, rng.stream_id(rng.LANDMARKS, 1)).raw(8)
    c = rng.Stream(1, rng.stream_id(rng.GNM)).raw(8)
    assert len({tuple(a), tuple(b), tuple(c)}) == 3
    assert rng.stream_id(rng.PAIRS, 2) == (2 << 32) | rng.PAIRS
