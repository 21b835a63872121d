"""Deterministic seed derivation.

Every random quantity in a round is drawn from a generator keyed by the
master seed plus a label path, so runs are reproducible and independent
streams never share state.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *labels) -> int:
    digest = hashlib.sha256(repr((int(seed),) + labels).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def generator(seed: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *labels))


def randbelow(gen: np.random.Generator, bound: int) -> int:
    """Uniform integer in [0, bound) for arbitrarily large ``bound``."""
    nbytes = (bound.bit_length() + 7) // 8 + 8
    return int.from_bytes(gen.bytes(nbytes), "little") % bound
