"""AES-128-CTR expansion of a seed into field elements."""

from __future__ import annotations

import hashlib

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .. import field as F

_ZERO_IV = b"\x00" * 16


def seed_key(seed: bytes | int) -> bytes:
    """16-byte AES key from an arbitrary seed."""
    if isinstance(seed, int):
        seed = seed.to_bytes((seed.bit_length() + 7) // 8 or 1, "big")
    return hashlib.sha256(b"pvf/prg" + seed).digest()[:16]


def _keystream(key: bytes):
    enc = Cipher(algorithms.AES(key), modes.CTR(_ZERO_IV)).encryptor()
    return lambda n: enc.update(b"\x00" * n)


def prg_vector(seed: bytes | int, size: int, p: int) -> np.ndarray:
    """Uniform field vector by rejection sampling from the AES-CTR stream."""
    stream = _keystream(seed_key(seed))
    bits = p.bit_length()
    if F.dtype_for(p) is object:
        width = (bits + 7) // 8
        top = (1 << bits) - 1
        out = []
        while len(out) < size:
            v = int.from_bytes(stream(width), "little") & top
            if v < p:
                out.append(v)
        return np.array(out, dtype=object)
    mask = np.uint64((1 << bits) - 1)
    pieces, have = [], 0
    want = size
    while have < size:
        # small headroom so one pass almost always suffices
        words = np.frombuffer(stream(8 * (want + 8)), dtype="<u8") & mask
        words = words[words < np.uint64(p)]
        pieces.append(words)
        have += len(words)
        want = max(size - have, 1)
    return np.concatenate(pieces)[:size].astype(np.uint64)
