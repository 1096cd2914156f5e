"""Additively homomorphic encryption (Paillier) with a fixed-point codec.

Supports exactly the evaluation set federated averaging needs: addition of
two ciphertexts and multiplication of a ciphertext by a plaintext scalar.
Key generation is deterministic for a fixed seed: a SplitMix64 stream feeds
both the prime candidates and the Miller-Rabin witnesses (40 rounds).

Real-valued model weights are mapped onto the plaintext ring [0, n) by
``FixedPointCodec``: non-negative reals scale to ``round(x * scale)`` and
negatives wrap to ``n - round(|x| * scale)``, so homomorphic sums of mixed
signs come back out correctly as long as they stay within +-n/(2*scale).
"""

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpz, powmod

from .errors import CorruptionError, KeyMismatchError, ParameterError
from .rng import Rng, derive_seed

MILLER_RABIN_ROUNDS = 40
DEFAULT_SCALE = 1 << 24
_BATCH_CHUNK = 256  # fixed so results do not depend on worker count

_decrypt_calls = 0


def decrypt_call_count() -> int:
    """Total decrypt invocations in this process (test instrumentation)."""
    return _decrypt_calls


class HEPublicKey:
    """Public key: modulus n, generator g = n + 1, cached n^2 and byte width."""

    def __init__(self, modulus_n: int):
        self.modulus_n = int(modulus_n)
        self.generator_g = self.modulus_n + 1
        self.modulus_n_sq = self.modulus_n * self.modulus_n
        self.ciphertext_byte_width = (self.modulus_n_sq.bit_length() + 7) // 8
        self._n = mpz(self.modulus_n)
        self._nsq = mpz(self.modulus_n_sq)

    def __eq__(self, other):
        return isinstance(other, HEPublicKey) and self.modulus_n == other.modulus_n

    def __repr__(self):
        return f"HEPublicKey(bits={self.modulus_n.bit_length()})"


class HEPrivateKey:
    """Private key: lambda = lcm(p-1, q-1) and mu = L(g^lambda mod n^2)^-1 mod n.

    When the prime factors are supplied the key precomputes CRT constants and
    decryption runs two half-size exponentiations instead of one full-size.
    """

    def __init__(self, lam: int, mu: int, modulus_n: int,
                 prime_p: int | None = None, prime_q: int | None = None):
        self.lam = int(lam)
        self.mu = int(mu)
        self.modulus_n = int(modulus_n)
        self.prime_p = int(prime_p) if prime_p is not None else None
        self.prime_q = int(prime_q) if prime_q is not None else None
        n = mpz(self.modulus_n)
        self._n = n
        self._nsq = n * n
        self._lam = mpz(self.lam)
        self._mu = mpz(self.mu)
        if self.prime_p is not None and self.prime_q is not None:
            p, q = mpz(self.prime_p), mpz(self.prime_q)
            self._psq, self._qsq = p * p, q * q
            self._p, self._q = p, q
            self._hp = gmpy2.invert((powmod(n + 1, p - 1, self._psq) - 1) // p, p)
            self._hq = gmpy2.invert((powmod(n + 1, q - 1, self._qsq) - 1) // q, q)
            self._q_inv_p = gmpy2.invert(q % p, p)
            self._qsq_inv_psq = gmpy2.invert(self._qsq % self._psq, self._psq)
        else:
            self._p = None

    def __repr__(self):
        return f"HEPrivateKey(bits={self.modulus_n.bit_length()})"


@dataclass(frozen=True)
class Ciphertext:
    """Paillier ciphertext: an integer in [0, n^2) plus its serialized width."""

    value: int
    byte_width: int

    def to_bytes(self) -> bytes:
        """Big-endian, left-zero-padded to exactly byte_width bytes."""
        return self.value.to_bytes(self.byte_width, "big")

    def to_hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Ciphertext":
        return cls(int.from_bytes(raw, "big"), len(raw))

    @classmethod
    def from_hex(cls, h: str) -> "Ciphertext":
        return cls.from_bytes(bytes.fromhex(h))


_SMALL_PRIMES = []


def _small_primes():
    global _SMALL_PRIMES
    if not _SMALL_PRIMES:
        sieve = bytearray([1]) * 2000
        sieve[0] = sieve[1] = 0
        for i in range(2, 45):
            if sieve[i]:
                sieve[i * i:: i] = bytearray(len(sieve[i * i:: i]))
        _SMALL_PRIMES = [i for i, f in enumerate(sieve) if f]
    return _SMALL_PRIMES


def _is_probable_prime(n: int, rng: Rng, rounds: int = MILLER_RABIN_ROUNDS) -> bool:
    """Miller-Rabin with witnesses drawn from the caller's stream."""
    for sp in _small_primes():
        if n % sp == 0:
            return n == sp
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    nm = mpz(n)
    for _ in range(rounds):
        a = 2 + rng.big_below(n - 3)
        x = powmod(a, d, nm)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = powmod(x, 2, nm)
            if x == n - 1:
                break
        else:
            return False
    return True


def _gen_prime(bits: int, rng: Rng) -> int:
    while True:
        cand = rng.big_below(1 << bits) | (1 << (bits - 1)) | 1
        if _is_probable_prime(cand, rng):
            return cand


def keygen(bit_length: int, rng_seed: int) -> tuple[HEPublicKey, HEPrivateKey]:
    """Deterministic keypair: n = p*q with distinct primes of bit_length/2 bits.

    Args:
        bit_length: modulus size in bits; even and >= 16 (2048 for production).
        rng_seed: 64-bit seed; the same seed always yields the same keys.
    """
    if bit_length < 16 or bit_length % 2 != 0:
        raise ParameterError(f"bit_length must be even and >= 16, got {bit_length}")
    rng = Rng(derive_seed(rng_seed, "keygen", bit_length))
    half = bit_length // 2
    while True:
        p = _gen_prime(half, rng)
        q = _gen_prime(half, rng)
        if p != q and gmpy2.gcd(p * q, (p - 1) * (q - 1)) == 1:
            return keypair_from_primes(p, q)


def keypair_from_primes(p: int, q: int) -> tuple[HEPublicKey, HEPrivateKey]:
    """Build a keypair from known primes (toy vectors and tests)."""
    if p == q:
        raise ParameterError("primes must be distinct")
    n = p * q
    if gmpy2.gcd(n, (p - 1) * (q - 1)) != 1:
        raise ParameterError("gcd(pq, (p-1)(q-1)) must be 1")
    lam = int(gmpy2.lcm(p - 1, q - 1))
    nsq = mpz(n) * n
    mu = int(gmpy2.invert((powmod(n + 1, lam, nsq) - 1) // n, n))
    return HEPublicKey(n), HEPrivateKey(lam, mu, n, p, q)


def encrypt_with_randomizer(pk: HEPublicKey, m: int, r: int) -> Ciphertext:
    """c = g^m * r^n mod n^2 with an explicit randomizer (deterministic core)."""
    if not 0 <= m < pk.modulus_n:
        raise ParameterError(f"plaintext out of range [0, n): {m}")
    # g = n + 1, so g^m mod n^2 collapses to 1 + m*n
    gm = (1 + mpz(m) * pk._n) % pk._nsq
    c = (gm * powmod(r, pk._n, pk._nsq)) % pk._nsq
    return Ciphertext(int(c), pk.ciphertext_byte_width)


def _draw_randomizer(pk: HEPublicKey, rng: Rng) -> int:
    while True:
        r = 1 + rng.big_below(pk.modulus_n - 1)
        if gmpy2.gcd(r, pk.modulus_n) == 1:
            return r


def encrypt(pk: HEPublicKey, m: int, rng: Rng) -> Ciphertext:
    """Probabilistic encryption of m in [0, n); fresh randomizer per call."""
    return encrypt_with_randomizer(pk, m, _draw_randomizer(pk, rng))


def _crt_randomizer(sk: HEPrivateKey, rng: Rng) -> mpz:
    """Uniform n-th residue mod n^2 sampled via the prime factors.

    The n-th residues mod p^2 coincide with the p-th powers (keygen enforces
    gcd(q, p-1) = 1), so two half-size exponentiations replace one full-size.
    """
    while True:
        u = 2 + rng.big_below(int(sk._psq) - 2)
        if u % sk.prime_p != 0:
            break
    while True:
        v = 2 + rng.big_below(int(sk._qsq) - 2)
        if v % sk.prime_q != 0:
            break
    sp = powmod(u, sk._p, sk._psq)
    sq = powmod(v, sk._q, sk._qsq)
    return (sq + sk._qsq * (((sp - sq) * sk._qsq_inv_psq) % sk._psq)) % sk._nsq


def decrypt(sk: HEPrivateKey, pk: HEPublicKey, c: Ciphertext) -> int:
    """m = L(c^lambda mod n^2) * mu mod n, where L(u) = (u - 1) / n.

    Raises CorruptionError when the ciphertext is not a unit mod n^2 (shares
    a factor with n). Arbitrary bit-flips generally still decrypt to *some*
    plaintext: the scheme is malleable by design and has no integrity check.
    """
    global _decrypt_calls
    _decrypt_calls += 1
    if not 0 <= c.value < pk.modulus_n_sq:
        raise ParameterError("ciphertext out of range [0, n^2)")
    cv = mpz(c.value)
    if sk._p is not None:
        up = powmod(cv, sk._p - 1, sk._psq)
        uq = powmod(cv, sk._q - 1, sk._qsq)
        if (up - 1) % sk._p != 0 or (uq - 1) % sk._q != 0:
            raise CorruptionError("ciphertext shares a factor with the modulus")
        m_p = (((up - 1) // sk._p) * sk._hp) % sk._p
        m_q = (((uq - 1) // sk._q) * sk._hq) % sk._q
        m = (m_q + sk._q * (((m_p - m_q) * sk._q_inv_p) % sk._p)) % sk._n
        return int(m)
    u = powmod(cv, sk._lam, sk._nsq)
    if (u - 1) % sk._n != 0:
        raise CorruptionError("ciphertext shares a factor with the modulus")
    return int((((u - 1) // sk._n) * sk._mu) % sk._n)


def he_add(pk: HEPublicKey, c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    """Homomorphic addition: decrypts to (m1 + m2) mod n."""
    if c1.byte_width != c2.byte_width or c1.byte_width != pk.ciphertext_byte_width:
        raise KeyMismatchError("ciphertext widths differ; mixed keys?")
    return Ciphertext(int((mpz(c1.value) * c2.value) % pk._nsq), c1.byte_width)


def he_scalar_mul(pk: HEPublicKey, c: Ciphertext, k: int) -> Ciphertext:
    """Plaintext-scalar multiplication: decrypts to (k * m) mod n."""
    if not 0 <= k < pk.modulus_n:
        raise ParameterError(f"scalar out of range [0, n): {k}")
    if c.byte_width != pk.ciphertext_byte_width:
        raise KeyMismatchError("ciphertext width does not match key")
    return Ciphertext(int(powmod(c.value, k, pk._nsq)), c.byte_width)


class FixedPointCodec:
    """Signed fixed-point encoding of reals onto the plaintext ring [0, n)."""

    def __init__(self, modulus_n: int, scale: int = DEFAULT_SCALE):
        if scale <= 0:
            raise ParameterError("scale must be positive")
        self.scale = scale
        self.modulus_n = modulus_n
        self._half = (modulus_n - 1) // 2

    def encode(self, x: float) -> int:
        if x != x or x in (float("inf"), float("-inf")):
            raise ParameterError(f"cannot encode non-finite value {x}")
        m = int(round(abs(x) * self.scale))
        if m > self._half:
            raise ParameterError(f"|{x}| exceeds codec range n/(2*scale)")
        if x < 0 and m > 0:
            return self.modulus_n - m
        return m

    def decode(self, m: int) -> float:
        if not 0 <= m < self.modulus_n:
            raise ParameterError("encoded value out of range [0, n)")
        signed = m if m <= self._half else m - self.modulus_n
        try:
            return signed / self.scale
        except OverflowError:
            # garbage inputs (e.g. adversarial reads) saturate instead of raising
            return float("inf") if signed > 0 else float("-inf")


# --- batch helpers -----------------------------------------------------------
#
# Bulk encryption/decryption for the protocol hot path. Results are identical
# for any worker count: randomizers derive from (seed, chunk index) and the
# chunk size is a constant.

_worker_keys: dict = {}


def _init_pool_worker(n, p, q, lam, mu):
    pk = HEPublicKey(n)
    sk = HEPrivateKey(lam, mu, n, p, q) if p is not None else None
    _worker_keys["pk"] = pk
    _worker_keys["sk"] = sk


def _enc_chunk_with(pk, sk, chunk_idx, seed, ms):
    rng = Rng(derive_seed(seed, "enc-chunk", chunk_idx))
    out = []
    if sk is not None:
        for m in ms:
            if not 0 <= m < pk.modulus_n:
                raise ParameterError(f"plaintext out of range [0, n): {m}")
            gm = (1 + mpz(m) * pk._n) % pk._nsq
            out.append(int((gm * _crt_randomizer(sk, rng)) % pk._nsq))
    else:
        for m in ms:
            out.append(encrypt_with_randomizer(pk, m, _draw_randomizer(pk, rng)).value)
    return out


def _enc_chunk(args):
    chunk_idx, seed, ms = args
    return _enc_chunk_with(_worker_keys["pk"], _worker_keys["sk"], chunk_idx, seed, ms)


def _dec_chunk(cvals):
    pk, sk = _worker_keys["pk"], _worker_keys["sk"]
    w = pk.ciphertext_byte_width
    return [decrypt(sk, pk, Ciphertext(v, w)) for v in cvals]


def _pool(pk, sk, procs):
    import multiprocessing as mp

    ctx = mp.get_context("fork")
    init_args = (pk.modulus_n,
                 sk.prime_p if sk else None, sk.prime_q if sk else None,
                 sk.lam if sk else 0, sk.mu if sk else 0)
    return ctx.Pool(procs, initializer=_init_pool_worker, initargs=init_args)


def encrypt_many(pk: HEPublicKey, values: list[int], seed: int,
                 private: HEPrivateKey | None = None, procs: int = 1) -> list[Ciphertext]:
    """Encrypt a list of encoded integers.

    With ``private`` supplied (clients hold the keypair in this protocol) the
    randomizer is sampled through the CRT shortcut; the output distribution is
    identical to the public path, only faster.
    """
    chunks = [(i // _BATCH_CHUNK, seed, values[i:i + _BATCH_CHUNK])
              for i in range(0, len(values), _BATCH_CHUNK)]
    if procs > 1 and len(chunks) > 1:
        with _pool(pk, private, procs) as pool:
            parts = pool.map(_enc_chunk, chunks)
    else:
        parts = [_enc_chunk_with(pk, private, ci, sd, ms) for ci, sd, ms in chunks]
    w = pk.ciphertext_byte_width
    return [Ciphertext(v, w) for part in parts for v in part]


def decrypt_many(sk: HEPrivateKey, pk: HEPublicKey, cs: list[Ciphertext],
                 procs: int = 1) -> list[int]:
    """Decrypt a list of ciphertexts (counts toward the decrypt counter)."""
    global _decrypt_calls
    chunks = [[c.value for c in cs[i:i + _BATCH_CHUNK]]
              for i in range(0, len(cs), _BATCH_CHUNK)]
    if procs > 1 and len(chunks) > 1:
        with _pool(pk, sk, procs) as pool:
            parts = pool.map(_dec_chunk, chunks)
        _decrypt_calls += len(cs)  # worker-side increments happen in other processes
        return [m for part in parts for m in part]
    return [decrypt(sk, pk, c) for c in cs]
