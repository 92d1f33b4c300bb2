"""Additively homomorphic encryption (Paillier scheme, g = N + 1).

Encryption of m under modulus N is (1 + m*N) * r^N mod N^2 with a fresh
unit r.  Products of ciphertexts add plaintexts, powers multiply the
plaintext by a known scalar, and the modular inverse of a ciphertext
negates its plaintext.  Multiplying by a fresh encryption of zero changes
the ciphertext without touching the plaintext (rerandomization).

All participants of a peer group share one key pair; the service provider
receives only the public part.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpz, powmod, invert

from .errors import (
    DecryptFailure,
    KeyMismatch,
    PlaintextOutOfRange,
    WeakKeyRejected,
)
from .rng import SecretStream

MIN_SECURE_BITS = 512
_MR_ROUNDS = 40  # error bound 4^-40 < 2^-80 per candidate


def key_fingerprint(n: int) -> str:
    """Short stable identifier for a modulus, used to bind ciphertexts."""
    return hashlib.sha256(format(n, "x").encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PublicKey:
    n: int
    bits: int

    @property
    def n_sq(self) -> int:
        return self.n * self.n

    @property
    def key_id(self) -> str:
        return key_fingerprint(self.n)

    def ciphertext_bytes(self) -> int:
        """Fixed serialized width: ciphertexts live below N^2."""
        return 2 * ((self.bits + 7) // 8)


@dataclass(frozen=True)
class PrivateKey:
    n: int
    bits: int
    p: int
    q: int
    lam: int
    mu: int

    @property
    def key_id(self) -> str:
        return key_fingerprint(self.n)

    def public_key(self) -> PublicKey:
        return PublicKey(n=self.n, bits=self.bits)


@dataclass(frozen=True)
class Ciphertext:
    value: int
    key_id: str


def _random_prime(bits: int, rng: SecretStream) -> mpz:
    # Top two bits forced so the product of two such primes always has
    # exactly 2*bits bits.
    top = (mpz(3) << (bits - 2)) | 1
    while True:
        candidate = mpz(rng.getrandbits(bits)) | top
        if gmpy2.is_prime(candidate, _MR_ROUNDS):
            return candidate


def keygen(bits: int, rng: SecretStream | None = None,
           allow_insecure: bool = False) -> PrivateKey:
    """Generate a key pair with an exactly ``bits``-bit modulus."""
    if bits % 2 != 0:
        raise WeakKeyRejected(f"modulus bits must be even, got {bits}")
    if bits < MIN_SECURE_BITS and not allow_insecure:
        raise WeakKeyRejected(
            f"{bits}-bit modulus below the {MIN_SECURE_BITS}-bit floor"
        )
    if bits < 16:
        raise WeakKeyRejected("modulus too small to be functional")
    rng = rng or SecretStream.from_entropy()
    half = bits // 2
    while True:
        p = _random_prime(half, rng)
        q = _random_prime(half, rng)
        if p == q:
            continue
        n = p * q
        if n.bit_length() != bits:
            continue
        if gmpy2.gcd(n, (p - 1) * (q - 1)) != 1:
            continue
        return keypair_from_primes(int(p), int(q))


def keypair_from_primes(p: int, q: int) -> PrivateKey:
    """Assemble a key pair from known primes (also used for tiny test keys)."""
    if p == q:
        raise WeakKeyRejected("primes must be distinct")
    n = mpz(p) * mpz(q)
    lam = gmpy2.lcm(p - 1, q - 1)
    if gmpy2.gcd(n, lam) != 1:
        raise WeakKeyRejected("gcd(N, lambda) != 1")
    # With g = N + 1:  L(g^lam mod N^2) = lam, so mu = lam^-1 mod N.
    mu = invert(lam, n)
    return PrivateKey(
        n=int(n), bits=n.bit_length(), p=int(p), q=int(q),
        lam=int(lam), mu=int(mu),
    )


def _check_key(ct: Ciphertext, key_id: str) -> None:
    if ct.key_id != key_id:
        raise KeyMismatch(
            f"ciphertext bound to key {ct.key_id}, expected {key_id}"
        )


def random_unit(pk: PublicKey, rng: SecretStream) -> int:
    """Fresh randomizer in [1, N) coprime to N."""
    n = mpz(pk.n)
    while True:
        r = mpz(rng.randrange(1, pk.n))
        if gmpy2.gcd(r, n) == 1:
            return int(r)


def encrypt(pk: PublicKey, plaintext: int, rng: SecretStream) -> Ciphertext:
    if not 0 <= plaintext < pk.n:
        raise PlaintextOutOfRange(
            f"plaintext {plaintext} outside [0, N)"
        )
    n = mpz(pk.n)
    n_sq = n * n
    r = mpz(random_unit(pk, rng))
    value = (1 + mpz(plaintext) * n) * powmod(r, n, n_sq) % n_sq
    return Ciphertext(value=int(value), key_id=pk.key_id)


def decrypt(sk: PrivateKey, ct: Ciphertext) -> int:
    _check_key(ct, sk.key_id)
    n = mpz(sk.n)
    n_sq = n * n
    value = mpz(ct.value)
    if not 0 < value < n_sq or gmpy2.gcd(value, n) != 1:
        raise DecryptFailure("ciphertext is not a unit mod N^2")
    u = powmod(value, sk.lam, n_sq)
    ell = (u - 1) // n
    return int(ell * sk.mu % n)


def hom_add(pk: PublicKey, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    _check_key(a, pk.key_id)
    _check_key(b, pk.key_id)
    return Ciphertext(
        value=int(mpz(a.value) * mpz(b.value) % mpz(pk.n_sq)),
        key_id=pk.key_id,
    )


def scalar_mul(pk: PublicKey, ct: Ciphertext, k: int) -> Ciphertext:
    _check_key(ct, pk.key_id)
    if not 0 <= k < pk.n:
        raise PlaintextOutOfRange(f"scalar {k} outside [0, N)")
    return Ciphertext(
        value=int(powmod(mpz(ct.value), mpz(k), mpz(pk.n_sq))),
        key_id=pk.key_id,
    )


def negate(pk: PublicKey, ct: Ciphertext) -> Ciphertext:
    """Plaintext negation via modular inversion of the ciphertext."""
    _check_key(ct, pk.key_id)
    return Ciphertext(
        value=int(invert(mpz(ct.value), mpz(pk.n_sq))),
        key_id=pk.key_id,
    )


def rerandomize(pk: PublicKey, ct: Ciphertext, rng: SecretStream) -> Ciphertext:
    """Multiply by a fresh encryption of zero; plaintext unchanged."""
    return hom_add(pk, ct, encrypt(pk, 0, rng))


def serialize_ciphertext(pk: PublicKey, ct: Ciphertext) -> bytes:
    _check_key(ct, pk.key_id)
    return ct.value.to_bytes(pk.ciphertext_bytes(), "big")


def deserialize_ciphertext(pk: PublicKey, blob: bytes) -> Ciphertext:
    if len(blob) != pk.ciphertext_bytes():
        raise DecryptFailure(
            f"serialized ciphertext must be {pk.ciphertext_bytes()} bytes"
        )
    value = int.from_bytes(blob, "big")
    if not 0 < value < pk.n_sq:
        raise DecryptFailure("ciphertext outside (0, N^2)")
    return Ciphertext(value=value, key_id=pk.key_id)
