"""Portable random streams.

Every annealer owns one :class:`RandomSource`. The generator is xoshiro256**
seeded through splitmix64, written with numba so the same stream can be
advanced from Python code and from inside compiled kernels. Streams are
bit-identical across machines for a given seed.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_MASK64 = (1 << 64) - 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STREAM_SALT = np.uint64(0xD1B54A32D192ED03)


@njit(cache=True, nogil=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True, nogil=True)
def _seed_state(state, seed):
    z = np.uint64(seed)
    for j in range(4):
        z = z + _GOLDEN
        state[j] = _mix64(z)


@njit(cache=True, nogil=True)
def _next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True, nogil=True)
def _next_double(s):
    return np.float64(_next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def _randbelow(s, n):
    # Exact uniform on [0, n) by masked rejection; n == 1 consumes no draw.
    if n <= 1:
        return 0
    bits = 0
    m = n - 1
    while m > 0:
        bits += 1
        m >>= 1
    shift = np.uint64(64 - bits)
    while True:
        x = np.int64(_next_u64(s) >> shift)
        if x < n:
            return x


@njit(cache=True, nogil=True)
def _derive_seed(base, i, r):
    h = _mix64(base ^ _STREAM_SALT)
    return _mix64(h ^ ((np.uint64(i) << np.uint64(32)) | np.uint64(r)))


@njit(cache=True)
def _fill_integers(s, out, low, span):
    for k in range(out.shape[0]):
        out[k] = low + _randbelow(s, span)


def seed_derivation(base_seed: int, instance: int, restart: int) -> int:
    """Stream seed for restart ``restart`` of annealer ``instance``.

    Injective in ``(instance, restart)`` for a fixed base seed as long as both
    are below 2**32, and injective in ``base_seed`` for fixed indices.
    """
    if not (0 <= instance < 2**32 and 0 <= restart < 2**32):
        raise ValueError("instance and restart must lie in [0, 2**32)")
    return int(_derive_seed(np.uint64(base_seed & _MASK64), instance, restart))


class RandomSource:
    """Single-owner xoshiro256** stream.

    Not thread-safe; give each worker its own instance.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int = 0):
        self.state = np.empty(4, dtype=np.uint64)
        _seed_state(self.state, np.uint64(int(seed) & _MASK64))

    @classmethod
    def for_stream(cls, base_seed: int, instance: int, restart: int) -> "RandomSource":
        return cls(seed_derivation(base_seed, instance, restart))

    def next_u64(self) -> int:
        return int(_next_u64(self.state))

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return float(_next_double(self.state))

    def randbelow(self, n: int) -> int:
        if n < 1:
            raise ValueError("n must be positive")
        return int(_randbelow(self.state, n))

    def integers(self, low: int, high: int, size: int) -> np.ndarray:
        """``size`` uniform integers on ``[low, high)``."""
        if high <= low:
            raise ValueError("empty range")
        out = np.empty(size, dtype=np.int64)
        _fill_integers(self.state, out, low, high - low)
        return out

    def copy(self) -> "RandomSource":
        other = RandomSource.__new__(RandomSource)
        other.state = self.state.copy()
        return other

    def __repr__(self):
        return f"RandomSource(state={[int(v) for v in self.state]})"
