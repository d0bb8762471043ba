"""Random number streams.

All randomness flows through counter-based Philox generators keyed by a
64-bit seed.  Parallel chains use ``stream(seed, i)``: stream ``i`` is the
base generator jumped ``i`` times, which Philox guarantees to be
non-overlapping.  Identical seeds therefore reproduce identical sample
streams, chain by chain.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for the given seed, advanced to the given stream."""
    bitgen = np.random.Philox(key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    if stream:
        bitgen = bitgen.jumped(stream)
    return np.random.Generator(bitgen)


class BlockUniforms:
    """Uniform(0,1) variates drawn in blocks, for tight scalar loops."""

    def __init__(self, rng: np.random.Generator, block: int = 8192):
        self._rng = rng
        self._block = block
        self._buf = rng.random(block)
        self._i = 0

    def __call__(self) -> float:
        if self._i >= self._block:
            self._buf = self._rng.random(self._block)
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        return u


class BlockIntegers:
    """Uniform integers in [0, n), drawn in blocks."""

    def __init__(self, rng: np.random.Generator, n: int, block: int = 8192):
        self._rng = rng
        self._n = n
        self._block = block
        self._buf = rng.integers(0, n, size=block)
        self._i = 0

    def __call__(self) -> int:
        if self._i >= self._block:
            self._buf = self._rng.integers(0, self._n, size=self._block)
            self._i = 0
        v = self._buf[self._i]
        self._i += 1
        return int(v)
