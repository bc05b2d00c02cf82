"""Deterministic random numbers for weight init, data synthesis and shuffling.

Built on numpy's Philox engine, a counter-based generator whose stream
depends only on the seed, not on platform or draw history of other
instances. Child streams are derived through SeedSequence spawn keys so
independent components (subjects, layers) never share a stream.
"""

from __future__ import annotations

import numpy as np


class SeededRng:
    """Counter-based generator: identical seed => identical draw sequence."""

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._spawn_key = tuple(int(k) for k in _spawn_key)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self._spawn_key)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def derive(self, *key: int) -> "SeededRng":
        """Independent child stream; same (seed, key) always gives the same stream."""
        return SeededRng(self.seed, self._spawn_key + tuple(key))

    def uniform(self, low: float, high: float, shape=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape)

    def normal(self, loc: float = 0.0, scale: float = 1.0, shape=None) -> np.ndarray:
        return self._gen.normal(loc, scale, size=shape)

    def integers(self, low: int, high: int, shape=None) -> np.ndarray:
        return self._gen.integers(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice_p(self, n: int, p: np.ndarray) -> int:
        """Single categorical draw over range(n) with probabilities p."""
        return int(self._gen.choice(n, p=p))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, key={self._spawn_key})"
