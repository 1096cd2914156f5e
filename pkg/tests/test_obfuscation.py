import math

import numpy as np
import pytest

from dputil import laplace_ratio_bound_ok
from fas.errors import ParameterError
from fas.obfuscate import (
    NoiseConfig,
    ObfuscatedBlock,
    PermutationCache,
    ScrambleKey,
    add_laplace_noise,
    derive_permutation,
    format_as_encrypted,
    invert_permutation,
    parse_block,
    scramble,
    unscramble,
)
from fas.rng import Rng

ZERO_KEY = ScrambleKey(bytes(32))
SEQ_KEY = ScrambleKey(bytes(range(32)))


# --- permutation derivation ----------------------------------------------------


def test_permutation_golden_vectors():
    # frozen from the standalone seed-chain oracle (FNV-1a -> SplitMix64 -> FY)
    assert derive_permutation(ZERO_KEY, 0, 8).tolist() == [4, 1, 3, 5, 6, 0, 2, 7]
    assert derive_permutation(ZERO_KEY, 1, 16).tolist() == \
        [9, 14, 0, 2, 1, 8, 4, 5, 10, 15, 6, 7, 3, 11, 13, 12]


def test_permutation_single_bit_identity():
    assert derive_permutation(ZERO_KEY, 0, 1).tolist() == [0]


def test_permutation_deterministic():
    a = derive_permutation(SEQ_KEY, 12, 64)
    b = derive_permutation(SEQ_KEY, 12, 64)
    assert np.array_equal(a, b)


def test_permutations_distinct_across_block_indices():
    seen = set()
    for idx in range(1000):
        seen.add(derive_permutation(ZERO_KEY, idx, 2048).tobytes())
    assert len(seen) == 1000


def test_invert_permutation():
    perm = derive_permutation(SEQ_KEY, 3, 128)
    inv = invert_permutation(perm)
    assert np.array_equal(perm[inv], np.arange(128))


# --- formatting -----------------------------------------------------------------


def test_format_examples():
    assert format_as_encrypted(255, 4).payload == bytes.fromhex("000000ff")
    assert format_as_encrypted(0, 2).payload == bytes.fromhex("0000")


def test_format_roundtrip():
    rng = Rng(20)
    for _ in range(1000):
        m = rng.big_below(1 << 256)
        assert parse_block(format_as_encrypted(m, 64)) == m


def test_format_overflow():
    with pytest.raises(ParameterError):
        format_as_encrypted(1 << 16, 2)
    with pytest.raises(ParameterError):
        format_as_encrypted(-1, 2)


# --- scrambling -----------------------------------------------------------------


def test_scramble_golden_vectors():
    # frozen from the standalone oracle, key bytes 00..1f
    cases = [
        (0, "80", "01"),
        (3, "deadbeef", "dec7fcfd"),
        (7, "0123456789abcdef0123456789abcdef", "f1f2a80906c9ffd63e74002feaa34cd2"),
    ]
    for idx, plain_hex, scrambled_hex in cases:
        block = ObfuscatedBlock(bytes.fromhex(plain_hex), idx)
        assert scramble(block, SEQ_KEY).payload.hex() == scrambled_hex


def test_scramble_roundtrip_many_lengths():
    rng = Rng(21)
    for trial in range(10):
        key = ScrambleKey.generate(rng)
        for length in range(1, 65):
            payload = rng.bytes(length)
            block = ObfuscatedBlock(payload, trial)
            assert unscramble(scramble(block, key), key).payload == payload


def test_scramble_all_zero_payload():
    block = ObfuscatedBlock(bytes(32), 5)
    assert scramble(block, SEQ_KEY).payload == bytes(32)


def test_scramble_preserves_block_index():
    block = ObfuscatedBlock(b"\xaa\xbb", 9)
    assert scramble(block, SEQ_KEY).block_index == 9


def test_scramble_empty_payload_rejected():
    with pytest.raises(ParameterError):
        scramble(ObfuscatedBlock(b"", 0), SEQ_KEY)


def test_wrong_key_hamming_distance():
    rng = Rng(22)
    k1, k2 = ScrambleKey.generate(rng), ScrambleKey.generate(rng)
    nbits = 0
    mismatches = 0
    for i in range(1000):
        payload = rng.bytes(256)
        garbled = unscramble(scramble(ObfuscatedBlock(payload, i), k1), k2).payload
        diff = int.from_bytes(payload, "big") ^ int.from_bytes(garbled, "big")
        mismatches += bin(diff).count("1")
        nbits += 8 * 256
    assert 0.4 <= mismatches / nbits <= 0.6


def test_block_index_mismatch_garbles():
    rng = Rng(23)
    key = ScrambleKey.generate(rng)
    nbits = 0
    mismatches = 0
    for _ in range(200):
        payload = rng.bytes(256)
        garbled = unscramble(scramble(ObfuscatedBlock(payload, 3), key), key,
                             ).payload  # same key
        assert garbled == payload
        wrong = unscramble(ObfuscatedBlock(scramble(ObfuscatedBlock(payload, 3), key).payload, 4), key).payload
        diff = int.from_bytes(payload, "big") ^ int.from_bytes(wrong, "big")
        mismatches += bin(diff).count("1")
        nbits += 8 * 256
    assert 0.4 <= mismatches / nbits <= 0.6


def test_double_unscramble_is_not_identity():
    block = ObfuscatedBlock(bytes.fromhex("0123456789abcdef0123456789abcdef"), 7)
    s = scramble(block, SEQ_KEY)
    twice = unscramble(unscramble(s, SEQ_KEY), SEQ_KEY)
    assert twice.payload != s.payload


def test_scramble_is_data_independent():
    # permutation ignores payload bytes: bit-permutations are XOR-linear
    rng = Rng(24)
    key = ScrambleKey.generate(rng)
    a, b = rng.bytes(64), rng.bytes(64)
    xor = bytes(x ^ y for x, y in zip(a, b))
    sa = scramble(ObfuscatedBlock(a, 2), key).payload
    sb = scramble(ObfuscatedBlock(b, 2), key).payload
    sx = scramble(ObfuscatedBlock(xor, 2), key).payload
    assert sx == bytes(x ^ y for x, y in zip(sa, sb))


def test_permutation_cache_matches_direct():
    cache = PermutationCache()
    rng = Rng(25)
    key = ScrambleKey.generate(rng)
    for i in range(10):
        payload = rng.bytes(128)
        block = ObfuscatedBlock(payload, i)
        assert scramble(block, key, cache).payload == scramble(block, key).payload
        assert unscramble(block, key, cache).payload == unscramble(block, key).payload


# --- noise ----------------------------------------------------------------------


def test_noise_passthrough_when_disabled():
    cfg = NoiseConfig(epsilon_per_coord=1.0, clip_bound_c=1.0, enabled=False)
    assert add_laplace_noise(0.7, cfg, Rng(1)) == 0.7


def test_noise_degenerate_epsilon_inf():
    cfg = NoiseConfig(epsilon_per_coord=math.inf, clip_bound_c=1.0)
    assert add_laplace_noise(0.3, cfg, Rng(1)) == 0.3
    assert cfg.laplace_scale == 0.0


def test_noise_rejects_bad_epsilon():
    with pytest.raises(ParameterError):
        NoiseConfig(epsilon_per_coord=0.0, clip_bound_c=1.0)
    with pytest.raises(ParameterError):
        NoiseConfig(epsilon_per_coord=-2.0, clip_bound_c=1.0)


def test_noise_moments():
    # b = 2C/eps = 2; Laplace variance 2 b^2 = 8
    cfg = NoiseConfig(epsilon_per_coord=1.0, clip_bound_c=1.0)
    rng = Rng(26)
    xs = np.array([add_laplace_noise(0.0, cfg, rng) for _ in range(100_000)])
    assert abs(float(xs.mean())) < 0.03
    assert abs(float(xs.var()) - 8.0) <= 0.4


def test_laplace_mechanism_dp_bound():
    assert laplace_ratio_bound_ok(eps=1.0, n_samples=1_000_000, seed=303)
