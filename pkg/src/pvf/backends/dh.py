"""Finite-field Diffie-Hellman over safe-prime groups plus HKDF seed derivation."""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from gmpy2 import mpz, powmod

from ..errors import ParameterError, RangeError
from ..rng import randbelow

# RFC 3526 group 14; 2 generates the subgroup of order (P - 1) / 2.
_MODP_2048 = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16,
)
# 128-bit safe prime for fast tests; 4 is a square, so it has order (P - 1) / 2.
_TEST_SAFE_PRIME = 0xC2216B03F8483A1793A911639F7E66E3


@dataclass(frozen=True)
class DHGroup:
    modulus: int
    generator: int
    exponent_bits: int
    name: str

    @property
    def order(self) -> int:
        return (self.modulus - 1) // 2

    @property
    def width(self) -> int:
        return (self.modulus.bit_length() + 7) // 8


GROUPS = {
    "standard": DHGroup(_MODP_2048, 2, 256, "modp2048"),
    "test": DHGroup(_TEST_SAFE_PRIME, 4, 120, "test128"),
}


def dh_group(profile: str) -> DHGroup:
    try:
        return GROUPS[profile]
    except KeyError:
        raise ParameterError(f"unknown DH profile {profile!r}") from None


def keygen(group: DHGroup, gen) -> tuple[int, int]:
    """(secret, public) with a short secret exponent."""
    sk = randbelow(gen, (1 << group.exponent_bits) - 2) + 2
    return sk, int(powmod(group.generator, sk, group.modulus))


def agree(group: DHGroup, sk: int, peer_pk: int) -> int:
    P = group.modulus
    if not 1 < peer_pk < P - 1:
        raise RangeError("peer public key outside the group")
    return int(powmod(mpz(peer_pk), sk, P))


def derive_seed(shared: int, group: DHGroup, info: bytes) -> bytes:
    hkdf = HKDF(algorithm=hashes.SHA256(), length=32, salt=None, info=b"pvf/" + info)
    return hkdf.derive(shared.to_bytes(group.width, "big"))
