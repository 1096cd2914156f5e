"""Deterministic randomness primitives.

Everything random in this package flows from SplitMix64 streams seeded via
FNV-1a-64, so runs are reproducible from a single master seed and the
scramble-permutation chain is bit-exact across implementations:

    seed  = FNV-1a-64(domain bytes)
    rng   = SplitMix64(seed)
    perm  = Fisher-Yates over [0, n), j = next_u64() mod (i + 1)
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_SM_GAMMA = 0x9E3779B97F4A7C15


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & MASK64
    return h


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Scalar SplitMix64 generator (public-domain algorithm by Steele et al.)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _SM_GAMMA) & MASK64
        return _mix(self.state)

    def next_below(self, bound: int) -> int:
        """Uniform-ish integer in [0, bound); modulo construction by design."""
        return self.next_u64() % bound


def splitmix_words(seed: int, count: int) -> np.ndarray:
    """Vectorized SplitMix64: the same stream SplitMix64(seed) would emit."""
    idx = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed & MASK64) + idx * np.uint64(_SM_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniform01(words: np.ndarray) -> np.ndarray:
    """Map u64 words to floats in the open interval (0, 1)."""
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def fisher_yates(n: int, seed: int) -> np.ndarray:
    """Seeded Fisher-Yates permutation of [0, n) as an int array."""
    perm = list(range(n))
    if n > 1:
        words = splitmix_words(seed, n - 1).tolist()
        t = 0
        for i in range(n - 1, 0, -1):
            j = words[t] % (i + 1)
            t += 1
            perm[i], perm[j] = perm[j], perm[i]
    return np.asarray(perm, dtype=np.int64)


def derive_seed(master: int, *parts) -> int:
    """Stable sub-stream seed from a master seed and string/int labels."""
    buf = bytearray(b"FAS-DERIVE")
    buf += (master & MASK64).to_bytes(8, "big")
    for part in parts:
        if isinstance(part, int):
            buf += b"i" + (part & MASK64).to_bytes(8, "big")
        else:
            raw = str(part).encode()
            buf += b"s" + len(raw).to_bytes(2, "big") + raw
    return fnv1a64(bytes(buf))


class Rng:
    """Convenience wrapper: one SplitMix64 stream with typed draws."""

    def __init__(self, seed: int):
        self._sm = SplitMix64(seed)

    def u64(self) -> int:
        return self._sm.next_u64()

    def below(self, bound: int) -> int:
        return self._sm.next_below(bound)

    def float01(self) -> float:
        return ((self._sm.next_u64() >> 11) + 0.5) * 2.0**-53

    def laplace(self, scale: float) -> float:
        """Laplace(0, scale) via inverse CDF; scale 0 returns exactly 0."""
        if scale == 0.0:
            return 0.0
        u = self.float01() - 0.5
        return -scale * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))

    def gauss(self) -> float:
        """Standard normal via Box-Muller (one value per pair of draws)."""
        u1 = self.float01()
        u2 = self.float01()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def bytes(self, k: int) -> bytes:
        out = bytearray()
        while len(out) < k:
            out += self.u64().to_bytes(8, "big")
        return bytes(out[:k])

    def big_below(self, bound: int) -> int:
        """Uniform big integer in [0, bound) by rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        bits = bound.bit_length()
        words = (bits + 63) // 64
        shift = words * 64 - bits
        while True:
            v = 0
            for _ in range(words):
                v = (v << 64) | self.u64()
            v >>= shift
            if v < bound:
                return v


def laplace_array(seed: int, count: int, scale: float) -> np.ndarray:
    """Vector of Laplace(0, scale) samples from a fresh SplitMix64 stream."""
    if scale == 0.0:
        return np.zeros(count)
    u = uniform01(splitmix_words(seed, count)) - 0.5
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def gauss_array(seed: int, count: int) -> np.ndarray:
    """Vector of standard normals (Box-Muller over a SplitMix64 stream)."""
    words = splitmix_words(seed, 2 * count)
    u1 = uniform01(words[:count])
    u2 = uniform01(words[count:])
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
