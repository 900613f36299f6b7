"""Portable, seedable random streams.

Every random decision in the library draws from a :class:`Stream`, which is
Philox4x64-10 (the Random123 counter-based generator) keyed by the pair
``(seed, stream_id)`` with the counter starting at zero. Raw 64-bit outputs
are consumed in order; a uniform double in ``[0, 1)`` is ``(x >> 11) * 2**-53``.

Reference vector (seed 0, stream 0, first four raw outputs)::

    213000021201967259  4455796210202625458
    2055444239878205049 10411612076246414556

Stream ids separate independent purposes so that, for example, changing the
graph generator never perturbs landmark sampling for the same seed.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

GNM = 1
GEOMETRIC = 2
LANDMARKS = 3
TZ_LEVELS = 4
PAIRS = 5
FLOWS = 6


def stream_id(purpose: int, attempt: int = 0) -> int:
    """Combine a purpose tag and a retry counter into one 64-bit stream id."""
    return ((attempt & 0xFFFFFFFF) << 32) | (purpose & 0xFFFFFFFF)


class Stream:
    """A deterministic stream of uniforms keyed by ``(seed, stream)``."""

    def __init__(self, seed: int, stream: int = 0) -> None:
        key = np.array([seed & MASK64, stream & MASK64], dtype=np.uint64)
        self._bits = np.random.Philox(key=key)

    def raw(self, size: int) -> np.ndarray:
        return self._bits.random_raw(size)

    def uniforms(self, size: int) -> np.ndarray:
        """Return ``size`` doubles in ``[0, 1)``."""
        raw = self._bits.random_raw(size)
        return (raw >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)

    def integers(self, upper: int, size: int) -> np.ndarray:
        """Return ``size`` integers in ``[0, upper)`` as ``floor(u * upper)``."""
        return np.minimum((self.uniforms(size) * upper).astype(np.int64), upper - 1)
