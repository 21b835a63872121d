"""Result verification for the summed frozen vector.

Users share two random vectors kappa1 (no zero entries) and kappa2 that the
server never sees.  Instead of y each user uploads ``kappa1 * y`` and
``y + kappa2``.  Given the two server-side sums, every user checks

    sum(kappa1 * y) / kappa1 == sum(y + kappa2) - |U'| * kappa2

componentwise; a server that alters either sum without knowing the keys
fails the check with probability 1 - 1/(p-1) per tampered entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import field as F
from .errors import DimensionError
from .field import FieldConfig
from .rng import generator


@dataclass(frozen=True, eq=False)
class VerificationKeys:
    kappa1: np.ndarray
    kappa2: np.ndarray
    p: int

    @cached_property
    def kappa1_inv(self) -> np.ndarray:
        return F.inverse(self.kappa1, self.p)


@dataclass(frozen=True, eq=False)
class MaskedFrozenSubmission:
    grave: np.ndarray  # kappa1 * y
    acute: np.ndarray  # y + kappa2


@dataclass(frozen=True, eq=False)
class FrozenSumCheck:
    ok: bool
    sum_y: np.ndarray | None = None
    index: int | None = None

    def __bool__(self):
        return self.ok


def derive_verification_keys(shared_seed: int, length: int, cfg: FieldConfig) -> VerificationKeys:
    if length <= 0:
        raise DimensionError("verification keys need a positive length")
    gen = generator(shared_seed, "rve-keys")
    kappa1 = F.random_vector(gen, length, cfg.p, low=1)
    kappa2 = F.random_vector(gen, length, cfg.p)
    return VerificationKeys(kappa1=kappa1, kappa2=kappa2, p=cfg.p)


def mask_frozen(y: np.ndarray, keys: VerificationKeys) -> MaskedFrozenSubmission:
    if len(y) != len(keys.kappa1):
        raise DimensionError(f"frozen vector length {len(y)} != key length {len(keys.kappa1)}")
    p = keys.p
    return MaskedFrozenSubmission(grave=F.mul(keys.kappa1, y, p), acute=F.add(y, keys.kappa2, p))


def verify_frozen_sums(sum_grave, sum_acute, keys: VerificationKeys, survivors: int) -> FrozenSumCheck:
    if not len(sum_grave) == len(sum_acute) == len(keys.kappa1):
        raise DimensionError("masked sums and keys differ in length")
    if survivors < 1:
        raise ValueError("at least one surviving user is required")
    p = keys.p
    from_grave = F.mul(sum_grave, keys.kappa1_inv, p)
    from_acute = F.sub(sum_acute, F.scale(keys.kappa2, survivors, p), p)
    bad = np.nonzero(from_grave != from_acute)[0]
    if bad.size:
        return FrozenSumCheck(False, index=int(bad[0]))
    return FrozenSumCheck(True, sum_y=from_grave)
