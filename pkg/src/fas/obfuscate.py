"""Protection for the non-encrypted weight partition.

Three pieces: Laplace noise calibrated as a differential-privacy mechanism
(scale b = 2C/epsilon against weights clipped to [-C, C]), formatting of
plaintext integers into blocks the exact size of a ciphertext, and a keyed
permutation of the block's bits.

The permutation chain is normative for wire interoperability:

    seed = FNV-1a-64(key_bytes || block_index as 8 big-endian bytes)
    perm = Fisher-Yates over [0, nbits) driven by SplitMix64(seed)

Bit ``i`` of a payload means byte ``i // 8``, counting bits MSB-first within
the byte. Scrambling sets output bit ``i`` to input bit ``perm[i]``;
unscrambling applies the inverse. The permutation never depends on payload
bytes, so under differential privacy it is plain post-processing.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .rng import Rng, fisher_yates, fnv1a64


@dataclass(frozen=True)
class ScrambleKey:
    """32-byte scrambling key."""

    key_bytes: bytes

    def __post_init__(self):
        if len(self.key_bytes) != 32:
            raise ParameterError("scramble key must be exactly 32 bytes")

    @classmethod
    def generate(cls, rng: Rng) -> "ScrambleKey":
        return cls(rng.bytes(32))

    @classmethod
    def from_hex(cls, h: str) -> "ScrambleKey":
        return cls(bytes.fromhex(h))

    def to_hex(self) -> str:
        return self.key_bytes.hex()


@dataclass(frozen=True)
class NoiseConfig:
    """Laplace mechanism parameters: per-coordinate epsilon and clip bound C."""

    epsilon_per_coord: float
    clip_bound_c: float
    enabled: bool = True

    def __post_init__(self):
        if self.enabled:
            if not self.epsilon_per_coord > 0:
                raise ParameterError("epsilon must be positive")
            if not self.clip_bound_c > 0:
                raise ParameterError("clip bound must be positive")

    @property
    def laplace_scale(self) -> float:
        """b = 2C / epsilon; zero when disabled or epsilon is infinite."""
        if not self.enabled or math.isinf(self.epsilon_per_coord):
            return 0.0
        return 2.0 * self.clip_bound_c / self.epsilon_per_coord


@dataclass(frozen=True)
class ObfuscatedBlock:
    """Plaintext weight formatted to ciphertext width, possibly scrambled."""

    payload: bytes
    block_index: int


def add_laplace_noise(x: float, cfg: NoiseConfig, rng: Rng) -> float:
    """x plus Laplace(0, 2C/eps) noise; passthrough when disabled or eps=inf."""
    b = cfg.laplace_scale
    if b == 0.0:
        return x
    return x + rng.laplace(b)


def format_as_encrypted(m: int, width: int, block_index: int = 0) -> ObfuscatedBlock:
    """Pad integer m to a big-endian block exactly `width` bytes long."""
    if m < 0:
        raise ParameterError("negative integers cannot be formatted")
    try:
        payload = m.to_bytes(width, "big")
    except OverflowError:
        raise ParameterError(f"{m.bit_length()}-bit value does not fit {width} bytes") from None
    return ObfuscatedBlock(payload, block_index)


def parse_block(block: ObfuscatedBlock) -> int:
    return int.from_bytes(block.payload, "big")


def derive_permutation(key: ScrambleKey, block_index: int, nbits: int) -> np.ndarray:
    """Deterministic bit permutation for one block (see module docstring)."""
    if nbits < 1:
        raise ParameterError("nbits must be >= 1")
    seed = fnv1a64(key.key_bytes + block_index.to_bytes(8, "big"))
    return fisher_yates(nbits, seed)


def invert_permutation(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm), dtype=perm.dtype)
    return inv


class PermutationCache:
    """Memoizes per-(key, index, nbits) permutations; they are hot in rounds."""

    def __init__(self):
        self._cache: dict = {}

    def lookup(self, key: ScrambleKey, block_index: int, nbits: int):
        k = (key.key_bytes, block_index, nbits)
        hit = self._cache.get(k)
        if hit is None:
            perm = derive_permutation(key, block_index, nbits)
            hit = (perm, invert_permutation(perm))
            self._cache[k] = hit
        return hit


def _apply_bits(payload: bytes, gather: np.ndarray) -> bytes:
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
    return np.packbits(bits[gather]).tobytes()


def scramble(block: ObfuscatedBlock, key: ScrambleKey,
             cache: PermutationCache | None = None) -> ObfuscatedBlock:
    """Permute the block's bits: output bit i = input bit perm[i]."""
    if not block.payload:
        raise ParameterError("cannot scramble an empty payload")
    nbits = 8 * len(block.payload)
    if cache is not None:
        perm, _ = cache.lookup(key, block.block_index, nbits)
    else:
        perm = derive_permutation(key, block.block_index, nbits)
    return ObfuscatedBlock(_apply_bits(block.payload, perm), block.block_index)


def unscramble(block: ObfuscatedBlock, key: ScrambleKey,
               cache: PermutationCache | None = None) -> ObfuscatedBlock:
    """Exact inverse of scramble (applies the inverse permutation)."""
    if not block.payload:
        raise ParameterError("cannot unscramble an empty payload")
    nbits = 8 * len(block.payload)
    if cache is not None:
        _, inv = cache.lookup(key, block.block_index, nbits)
    else:
        inv = invert_permutation(derive_permutation(key, block.block_index, nbits))
    return ObfuscatedBlock(_apply_bits(block.payload, inv), block.block_index)
