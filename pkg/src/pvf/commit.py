"""Pedersen commitments and the user-commitment check on aggregate sums.

Commitments live in the order-q subgroup of Z_P^* (a Schnorr group).  The
second generator ``h`` is obtained by hashing a public string into the
subgroup, so nobody knows log_g(h).

Each user commits to every entry of its padded vector.  Once the server has
thawed the padded sum it checks, position by position, that the product of
all users' commitments opens to that sum under the summed blinding values.
The thawed sum is only known modulo the field prime p while the committed
values add up as integers, so the check accepts the sum plus any multiple
``w * p`` with ``0 <= w < |U'|``.  This needs ``q > |U'| * p``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import gmpy2
from gmpy2 import mpz, powmod

from .core import PaddedVector
from .errors import DimensionError, ParameterError
from .rng import generator, randbelow

PROFILES = {
    # rho -> (bits of q, bits of the ambient modulus P)
    "test": (128, 256),
    "standard": (256, 2048),
}

_H_TAG = b"pvf/pedersen/h"


@dataclass(frozen=True)
class PedersenParams:
    modulus: int  # P, with q | P - 1
    q: int
    g: int
    h: int
    rho: str
    seed: int

    @property
    def width(self) -> int:
        """Bytes per serialised group element."""
        return (self.modulus.bit_length() + 7) // 8

    @property
    def zeta_width(self) -> int:
        return (self.q.bit_length() + 7) // 8

    def in_group(self, c: int) -> bool:
        return 0 < c < self.modulus and powmod(c, self.q, self.modulus) == 1


@dataclass(frozen=True, eq=False)
class CommitmentVector:
    commitments: tuple
    zeta: tuple


def _prime_with_bits(gen, bits: int) -> mpz:
    while True:
        cand = mpz(randbelow(gen, 1 << bits)) | (mpz(1) << (bits - 1)) | 1
        if gmpy2.is_prime(cand, 40):
            return cand


def pc_setup(rho: str = "standard", seed: int = 0) -> PedersenParams:
    if rho not in PROFILES:
        raise ParameterError(f"unsupported security profile {rho!r}; choose from {sorted(PROFILES)}")
    return _setup(rho, int(seed))


@lru_cache(maxsize=8)
def _setup(rho: str, seed: int) -> PedersenParams:
    qbits, pbits = PROFILES[rho]
    gen = generator(seed, "pedersen", rho)
    q = _prime_with_bits(gen, qbits)
    kbits = pbits - qbits
    while True:
        k = mpz(randbelow(gen, 1 << kbits)) | (mpz(1) << (kbits - 1))
        k -= k % 2
        P = k * q + 1
        if P.bit_length() == pbits and gmpy2.is_prime(P, 40):
            break
    cof = (P - 1) // q
    while True:
        g = powmod(mpz(randbelow(gen, int(P - 3)) + 2), cof, P)
        if g != 1:
            break
    h = _hash_to_group(P, q, _H_TAG + seed.to_bytes(8, "little"))
    return PedersenParams(modulus=int(P), q=int(q), g=int(g), h=int(h), rho=rho, seed=seed)


def _hash_to_group(P: mpz, q: mpz, tag: bytes) -> mpz:
    cof = (P - 1) // q
    nbytes = (P.bit_length() + 7) // 8 + 16
    counter = 0
    while True:
        stream = b"".join(
            hashlib.sha256(tag + counter.to_bytes(4, "big") + i.to_bytes(4, "big")).digest()
            for i in range((nbytes + 31) // 32)
        )
        cand = powmod(mpz(int.from_bytes(stream[:nbytes], "big")) % P, cof, P)
        if cand > 1:
            return cand
        counter += 1


def commit(params: PedersenParams, s: int, t: int) -> int:
    P = params.modulus
    return int(powmod(params.g, s, P) * powmod(params.h, t, P) % P)


def pc_reveal(params: PedersenParams, c: int, s: int, t: int) -> bool:
    return int(c) == commit(params, s, t)


def commit_vector(params: PedersenParams, xp: PaddedVector, seed: int) -> CommitmentVector:
    """Commit to every padded entry with fresh blinding values."""
    return commit_entries(params, xp.entries, seed)


def commit_entries(params: PedersenParams, values, seed: int) -> CommitmentVector:
    gen = generator(seed, "zeta")
    P, g, h, q = mpz(params.modulus), mpz(params.g), mpz(params.h), params.q
    zeta = tuple(randbelow(gen, q) for _ in range(len(values)))
    cs = tuple(
        int(powmod(g, int(x), P) * powmod(h, z, P) % P) for x, z in zip(values, zeta)
    )
    return CommitmentVector(commitments=cs, zeta=zeta)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    index: int | None = None

    def __bool__(self):
        return self.ok


def zeta_sums(vectors: Sequence[CommitmentVector], q: int) -> list:
    if not vectors:
        return []
    length = len(vectors[0].zeta)
    if any(len(v.zeta) != length for v in vectors):
        raise DimensionError("blinding vectors differ in length")
    return [sum(col) % q for col in zip(*(v.zeta for v in vectors))]


def verify_aggregate_commitments(
    params: PedersenParams,
    commitments: Mapping[int, CommitmentVector] | Sequence[CommitmentVector],
    padded_sum,
    zeta_total,
    p: int,
) -> CheckResult:
    """Check prod_i c_i[r] == g^(sum[r] + w p) h^(zeta_total[r]) at every position r."""
    vecs = list(commitments.values()) if isinstance(commitments, Mapping) else list(commitments)
    if not vecs:
        raise DimensionError("no commitments to verify")
    length = len(padded_sum)
    if len(zeta_total) != length or any(len(v.commitments) != length for v in vecs):
        raise DimensionError("commitment, sum and blinding lengths differ")
    users = len(vecs)
    if params.q <= users * p:
        raise ParameterError("group order too small for the field sum of this many users")
    P, q = mpz(params.modulus), mpz(params.q)
    g, h = mpz(params.g), mpz(params.h)
    step = powmod(g, p, P)
    wraps = {mpz(1)}
    acc = mpz(1)
    for _ in range(users - 1):
        acc = acc * step % P
        wraps.add(acc)
    for r in range(length):
        lhs = mpz(1)
        for v in vecs:
            lhs = lhs * v.commitments[r] % P
        rhs = powmod(g, int(padded_sum[r]), P) * powmod(h, int(zeta_total[r]) % q, P) % P
        if lhs * gmpy2.invert(rhs, P) % P not in wraps:
            return CheckResult(False, r)
    return CheckResult(True)


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------


def commitment_wire_size(params: PedersenParams, count: int) -> int:
    """Length prefix plus commitments plus blinding values."""
    return 4 + count * params.width + 4 + count * params.zeta_width


def encode_commitments(params: PedersenParams, cv: CommitmentVector) -> bytes:
    w = params.width
    head = len(cv.commitments).to_bytes(4, "little")
    return head + b"".join(int(c).to_bytes(w, "big") for c in cv.commitments)


def decode_commitments(params: PedersenParams, buf: bytes) -> tuple:
    count = int.from_bytes(buf[:4], "little")
    w = params.width
    body = buf[4 : 4 + count * w]
    if len(body) != count * w:
        raise DimensionError("truncated commitment vector")
    return tuple(int.from_bytes(body[i : i + w], "big") for i in range(0, len(body), w))

