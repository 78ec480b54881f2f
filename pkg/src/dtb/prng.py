"""Seeded, portable pseudo-random numbers for reproducible benchmark inputs.

Benchmark grids and parameter draws must reproduce bit-for-bit across
platforms and library versions, so nothing here depends on the host
library's generator. Two related generators are provided:

* ``splitmix64`` evaluated in counter mode. The mixing function is applied
  to ``seed + i * GOLDEN`` for i = 1..n, which is exactly the sequence the
  sequential generator would emit but vectorizes to one numpy pass. Used
  for bulk grid fills.
* ``Xoshiro256StarStar``, a scalar stream generator seeded from splitmix64
  outputs in the conventional way. Used where a small number of sequential
  draws is needed (random weights, derived seeds).

Doubles are produced as ``(u64 >> 11) * 2**-53``, uniform in [0, 1).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "splitmix64",
    "random_doubles",
    "random_interior",
    "Xoshiro256StarStar",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4B7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_DOUBLE_SCALE = 2.0 ** -53


def _splitmix64_step(state: int) -> tuple[int, int]:
    """Advance the scalar splitmix64 state once; return (state, output)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return state, z ^ (z >> 31)


def splitmix64(seed: int, n: int) -> np.ndarray:
    """Return the first ``n`` splitmix64 outputs for ``seed`` as uint64.

    Counter-mode evaluation: output i is mix(seed + (i+1)*GOLDEN), identical
    to iterating the sequential generator n times.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    idx = np.arange(1, n + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK64) + idx * np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def random_doubles(seed: int, n: int) -> np.ndarray:
    """Return ``n`` float64 values uniform in [0, 1), reproducible by seed."""
    return (splitmix64(seed, n) >> np.uint64(11)).astype(np.float64) * _DOUBLE_SCALE


def random_interior(nx: int, ny: int, seed: int) -> np.ndarray:
    """Return an (ny, nx) array of uniform [0, 1) doubles in row-major fill order."""
    return random_doubles(seed, nx * ny).reshape(ny, nx)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """Sequential xoshiro256** stream, state seeded via splitmix64."""

    def __init__(self, seed: int):
        state = seed & _MASK64
        s = []
        for _ in range(4):
            state, out = _splitmix64_step(state)
            s.append(out)
        self._s = s

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _DOUBLE_SCALE

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive (modulo bias is irrelevant here)."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.next_u64() % (hi - lo + 1)

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]
