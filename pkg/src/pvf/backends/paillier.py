"""Paillier encryption and the homomorphic aggregation backend.

Users share one keypair; the server only ever sees the public key and
multiplies ciphertexts.  Encryption and decryption use the CRT split over
``p^2`` and ``q^2`` (keyholders know the factorisation).

Wire format for a ciphertext vector: 4-byte little-endian count followed by
fixed-width big-endian residues mod ``n^2``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import gmpy2
import numpy as np
from gmpy2 import mpz, powmod

from .. import field as F
from ..errors import DimensionError, ParameterError, RangeError, UnrecoverableRoundError
from ..rng import generator, randbelow
from .base import AggregationOutcome, Stopwatch, common_length, survivors_of

KEY_BITS = {"standard": 1024, "test": 256}

_COUNT = struct.Struct("<I")


@dataclass(frozen=True)
class PublicKey:
    n: int

    @cached_property
    def n2(self) -> int:
        return self.n * self.n

    @property
    def width(self) -> int:
        """Bytes per ciphertext residue."""
        return (self.n2.bit_length() + 7) // 8

    def add(self, c1: int, c2: int) -> int:
        return int(mpz(c1) * c2 % self.n2)


@dataclass(frozen=True, repr=False)
class PrivateKey:
    public: PublicKey
    p: int
    q: int

    def __repr__(self):
        return f"PrivateKey(n={self.public.n:#x}, ...)"

    @cached_property
    def _crt(self):
        p, q, n = mpz(self.p), mpz(self.q), mpz(self.public.n)
        p2, q2 = p * p, q * q
        g = n + 1

        def h(prime, sq):
            # L(g^(prime-1) mod prime^2)^-1 mod prime
            return gmpy2.invert((powmod(g, prime - 1, sq) - 1) // prime, prime)

        return {
            "p2": p2, "q2": q2,
            "n_mod_p": n % (p * (p - 1)), "n_mod_q": n % (q * (q - 1)),
            "q2inv": gmpy2.invert(q2, p2),
            "hp": h(p, p2), "hq": h(q, q2),
            "qinv": gmpy2.invert(q, p),
        }


@dataclass(frozen=True)
class Keypair:
    public: PublicKey
    private: PrivateKey


def _prime(gen, bits: int) -> mpz:
    while True:
        cand = mpz(randbelow(gen, 1 << bits)) | (mpz(3) << (bits - 2)) | 1
        if gmpy2.is_prime(cand, 40):
            return cand


def keygen(bits: int = 1024, seed: int = 0) -> Keypair:
    """Modulus of exactly ``bits`` bits with g = n + 1."""
    if bits < 64 or bits % 2:
        raise ParameterError("modulus size must be an even number of bits >= 64")
    gen = generator(seed, "paillier", bits)
    while True:
        p, q = _prime(gen, bits // 2), _prime(gen, bits // 2)
        if p != q and gmpy2.gcd(p * q, (p - 1) * (q - 1)) == 1:
            break
    pub = PublicKey(int(p * q))
    return Keypair(pub, PrivateKey(pub, int(p), int(q)))


def encrypt(priv: PrivateKey, m: int, r: int) -> int:
    """(1 + m n) r^n mod n^2, with r^n computed by CRT."""
    n, n2 = priv.public.n, priv.public.n2
    c = priv._crt
    rp = powmod(r, c["n_mod_p"], c["p2"])
    rq = powmod(r, c["n_mod_q"], c["q2"])
    rn = rq + c["q2"] * ((rp - rq) * c["q2inv"] % c["p2"])
    return int((1 + mpz(m) * n) * rn % n2)


def encrypt_public(pub: PublicKey, m: int, r: int) -> int:
    """Encryption without the factorisation (slower; used for cross-checks)."""
    return int((1 + mpz(m) * pub.n) * powmod(r, pub.n, pub.n2) % pub.n2)


def decrypt(priv: PrivateKey, ct: int) -> int:
    c = priv._crt
    p, q = mpz(priv.p), mpz(priv.q)
    ct = mpz(ct)
    if not 0 < ct < priv.public.n2:
        raise RangeError("ciphertext outside Z_{n^2}")
    mp = (powmod(ct, p - 1, c["p2"]) - 1) // p * c["hp"] % p
    mq = (powmod(ct, q - 1, c["q2"]) - 1) // q * c["hq"] % q
    return int(mq + q * ((mp - mq) * c["qinv"] % p))


# ---------------------------------------------------------------------------
# Vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EncryptedVector:
    public: PublicKey
    residues: tuple

    def __len__(self):
        return len(self.residues)

    def wire_size(self) -> int:
        return _COUNT.size + len(self.residues) * self.public.width

    def encode(self) -> bytes:
        w = self.public.width
        return _COUNT.pack(len(self.residues)) + b"".join(int(c).to_bytes(w, "big") for c in self.residues)

    @classmethod
    def decode(cls, public: PublicKey, buf: bytes) -> "EncryptedVector":
        (count,) = _COUNT.unpack_from(buf, 0)
        w = public.width
        body = buf[_COUNT.size : _COUNT.size + count * w]
        if len(body) != count * w:
            raise DimensionError("truncated ciphertext vector")
        vals = tuple(int.from_bytes(body[i : i + w], "big") for i in range(0, len(body), w))
        check_residues(public, vals)
        return cls(public, vals)


def check_residues(public: PublicKey, residues) -> None:
    n2 = public.n2
    for c in residues:
        if not 0 < c < n2:
            raise RangeError("ciphertext outside Z_{n^2}")


def encrypt_vector(priv: PrivateKey, values, seed: int, *labels) -> EncryptedVector:
    gen = generator(seed, "paillier-r", *labels)
    n = priv.public.n
    out = []
    for v in values:
        r = randbelow(gen, n - 1) + 1
        out.append(encrypt(priv, int(v), r))
    return EncryptedVector(priv.public, tuple(out))


def decrypt_sum(priv: PrivateKey, enc: EncryptedVector, p: int) -> np.ndarray:
    """Keyholder-side decryption of an aggregated vector, reduced mod p."""
    return F.as_vector([decrypt(priv, c) % p for c in enc.residues], p)


def check_capacity(pub: PublicKey, cfg: F.FieldConfig) -> None:
    """Integer sums of up to n_max entries below p must not wrap mod n."""
    if pub.n <= cfg.n_max * cfg.p:
        raise ParameterError("Paillier modulus too small for n_max * p")


class HEServer:
    """Server role: public key only, so there is nothing to decrypt with."""

    def __init__(self, public: PublicKey):
        self.public = public

    def fold(self, acc: list | None, enc: EncryptedVector) -> list:
        """Multiply one upload into the running product."""
        if enc.public != self.public:
            raise ParameterError("ciphertext under a different public key")
        if acc is None:
            check_residues(self.public, enc.residues)
            return [mpz(c) for c in enc.residues]
        if len(enc) != len(acc):
            raise DimensionError("ciphertext vectors differ in length")
        check_residues(self.public, enc.residues)
        n2 = mpz(self.public.n2)
        return [a * c % n2 for a, c in zip(acc, enc.residues)]

    def finish(self, acc: list | None) -> EncryptedVector:
        if acc is None:
            raise UnrecoverableRoundError("no ciphertexts to combine")
        return EncryptedVector(self.public, tuple(int(a) for a in acc))

    def combine(self, uploads) -> EncryptedVector:
        acc = None
        for enc in uploads:
            acc = self.fold(acc, enc)
        return self.finish(acc)


def he_backend_round(
    inputs: Mapping[int, np.ndarray],
    dropouts=(),
    keys: Keypair | None = None,
    seed: int = 0,
    p: int = F.MERSENNE_61,
) -> AggregationOutcome:
    """Users encrypt entrywise, the server multiplies ciphertexts of survivors.

    Dropped users send nothing.  The outcome carries the ciphertext sum;
    keyholders recover the plaintext with ``decrypt_sum``.
    """
    if keys is None:
        raise ParameterError("the HE backend needs a keypair")
    length = common_length(inputs)
    alive = survivors_of(inputs, dropouts)
    if not alive:
        raise UnrecoverableRoundError("no surviving users to aggregate")
    if keys.public.n <= len(inputs) * p:
        raise ParameterError("Paillier modulus too small for this many users")
    server = HEServer(keys.public)
    clocks = {u: Stopwatch() for u in alive}
    sw = Stopwatch()
    sent = {}
    acc = None
    # fold each upload as it arrives so only one plaintext-sized batch is live
    for u in alive:
        with clocks[u]:
            enc = encrypt_vector(keys.private, inputs[u], seed, u)
        sent[u] = enc.wire_size()
        with sw:
            acc = server.fold(acc, enc)
    with sw:
        total = server.finish(acc)
    return AggregationOutcome(
        survivors=frozenset(alive),
        sum_k=total,
        per_user_bytes=sent,
        timings={"user": float(np.mean([clocks[u].ms for u in alive])), "server": sw.ms},
        entries=length,
    )
