"""Deterministic 64-bit generator used by the synthetic signal generator.

SplitMix64: the output for step ``i`` is a pure xorshift-multiply mix of
``seed + (i+1) * GOLDEN``, so arbitrary slices of the stream can be produced
vectorised with NumPy uint64 arithmetic and the byte stream is identical for
a given seed on every platform that has IEEE-754 doubles.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = float(1 << 53)


class SplitMix64:
    """Counter-based SplitMix64 stream with uniform and normal draws."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._count = 0

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            z = self._seed + idx * _GOLDEN
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
            return z ^ (z >> np.uint64(31))

    def uniform(self, n: int) -> np.ndarray:
        """n doubles uniform on [0, 1), 53-bit resolution."""
        return (self._raw(n) >> np.uint64(11)).astype(np.float64) / _U53

    def normal(self, n: int) -> np.ndarray:
        """n standard normal doubles via Box-Muller on consecutive pairs."""
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1]: keeps log() finite
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return out[:n]

    def integers(self, n: int, bound: int) -> np.ndarray:
        """n integers on [0, bound) by 128-bit multiply-shift."""
        raw = self._raw(n)
        return ((raw.astype(object) * bound) >> 64).astype(np.int64)
