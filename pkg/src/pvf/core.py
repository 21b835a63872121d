"""Pad, group, freeze and thaw.

A user's vector is padded with random field elements to a multiple of
lambda and cut into consecutive groups ``d_j`` of lambda entries.  Each
group yields ``lambda - delta - 1`` frozen entries (check rows applied to
``d_j``) and ``delta + 1`` key entries (alpha rows applied to ``d_j``).
Because both maps are linear, summing frozen and key vectors over users
and applying ``A^-1`` group by group recovers the sum of the padded inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import field as F
from .errors import DimensionError, RangeError
from .linalg import FieldMatrix, FreezeMatrixSet
from .rng import generator


@dataclass(frozen=True, eq=False)
class PaddedVector:
    original_len: int
    entries: np.ndarray
    lam: int
    pad_seed: int | None = None

    @property
    def groups(self) -> int:
        return len(self.entries) // self.lam

    @property
    def pad_len(self) -> int:
        return len(self.entries) - self.original_len

    def grouped(self) -> np.ndarray:
        """Groups as columns: shape (lambda, l)."""
        return self.entries.reshape(self.groups, self.lam).T


@dataclass(frozen=True, eq=False)
class FrozenPair:
    y: np.ndarray
    k: np.ndarray
    groups: int


@dataclass(frozen=True, eq=False)
class ThawInput:
    sum_y: np.ndarray
    sum_k: np.ndarray
    matrices: FreezeMatrixSet
    original_len: int


def padded_length(m: int, lam: int) -> int:
    return m + (lam - m % lam) % lam


def key_length(m: int, lam: int, delta: int) -> int:
    """Entries a user hands to the aggregation backend."""
    return padded_length(m, lam) // lam * (delta + 1)


def pad_and_group(x, matrices: FreezeMatrixSet, seed: int) -> PaddedVector:
    p = matrices.p
    try:
        vec = F.as_vector(x, p)
    except RangeError as exc:
        raise RangeError(f"input entries must be < p: {exc}") from None
    if vec.ndim != 1:
        raise DimensionError("input must be a 1-D vector")
    m = len(vec)
    pad = padded_length(m, matrices.lam) - m
    if pad:
        tail = F.random_vector(generator(seed, "pad"), pad, p)
        vec = np.concatenate([vec, tail])
    return PaddedVector(original_len=m, entries=vec, lam=matrices.lam, pad_seed=seed)


def _apply(mat: FieldMatrix, xp: PaddedVector) -> np.ndarray:
    return np.ascontiguousarray(F.matmul(mat.data, xp.grouped(), mat.p).T).ravel()


def freeze(xp: PaddedVector, matrices: FreezeMatrixSet) -> FrozenPair:
    if xp.lam != matrices.lam or len(xp.entries) % matrices.lam:
        raise DimensionError("padded vector is not grouped by this lambda")
    return FrozenPair(
        y=_apply(matrices.a_check, xp),
        k=_apply(matrices.alpha, xp),
        groups=xp.groups,
    )


def freeze_with(xp: PaddedVector, check: FieldMatrix, alpha: FieldMatrix) -> FrozenPair:
    """Freeze with explicit row blocks (used to model a deviating user)."""
    return FrozenPair(y=_apply(check, xp), k=_apply(alpha, xp), groups=xp.groups)


def thaw(inp: ThawInput, truncate: bool = True) -> np.ndarray:
    """Recover the summed (padded) vector from summed frozen and key vectors.

    With ``truncate=False`` the padded tail is kept, which the commitment
    check needs.
    """
    ms = inp.matrices
    ny, nk = len(inp.sum_y), len(inp.sum_k)
    if ny % ms.check_rows or nk % ms.key_rows or ny // ms.check_rows != nk // ms.key_rows:
        raise DimensionError(
            f"sum_y ({ny}) and sum_k ({nk}) do not describe the same number of groups"
        )
    groups = nk // ms.key_rows
    if not groups * ms.lam - ms.lam < inp.original_len <= groups * ms.lam:
        raise DimensionError("original length does not match the group count")
    b = np.concatenate(
        [
            inp.sum_y.reshape(groups, ms.check_rows).T,
            inp.sum_k.reshape(groups, ms.key_rows).T,
        ]
    )
    out = np.ascontiguousarray(F.matmul(ms.a_inv.data, b, ms.p).T).ravel()
    return out[: inp.original_len] if truncate else out


def compression_ratio(matrices: FreezeMatrixSet) -> Fraction:
    """Fraction of entries that still go through secure aggregation."""
    return Fraction(matrices.delta + 1, matrices.lam)
