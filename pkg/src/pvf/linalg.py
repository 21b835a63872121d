"""Exact linear algebra over Z_p and generation of the public freeze matrices.

A freeze matrix ``A`` is a random invertible lambda x lambda matrix.  Its
first ``lambda - delta - 1`` rows (the *check* matrix) produce the frozen
vector that is published in the clear; the remaining ``delta + 1`` rows
(``alpha``) produce the key vector that goes through secure aggregation.

The element-privacy test reduces the check matrix to RREF and rejects it if
any row has exactly one nonzero entry: such a row is a standard basis
vector of the row space, i.e. one input element is exposed by a linear
combination of the published equations.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import field as F
from .errors import DimensionError, GenerationError, ParameterError, RangeError, SingularMatrixError
from .rng import generator

DEFAULT_MAX_ATTEMPTS = 1000


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """Dense matrix over Z_p backed by a 2-D numpy array."""

    p: int
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2:
            raise DimensionError("matrix data must be 2-D")
        if self.data.dtype != F.dtype_for(self.p):
            raise TypeError(f"expected dtype {F.dtype_for(self.p)}, got {self.data.dtype}")
        if self.data.size and (self.data >= self.p).any():
            raise RangeError("matrix entry outside the field")
        self.data.setflags(write=False)

    @classmethod
    def from_rows(cls, rows, p: int) -> "FieldMatrix":
        rows = [list(r) for r in rows]
        width = len(rows[0]) if rows else 0
        if any(len(r) != width for r in rows):
            raise DimensionError("ragged rows")
        flat = F.as_vector([int(v) % p for r in rows for v in r], p)
        return cls(p, flat.reshape(len(rows), width))

    @classmethod
    def identity(cls, n: int, p: int) -> "FieldMatrix":
        data = F.zeros((n, n), p)
        for i in range(n):
            data[i, i] = 1
        return cls(p, data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def entries(self) -> list:
        """Row-major list of entries as Python ints."""
        return [int(v) for v in self.data.ravel()]

    def tolist(self) -> list:
        return [[int(v) for v in row] for row in self.data]

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        return FieldMatrix(self.p, F.matmul(self.data, other.data, self.p))

    def __eq__(self, other):
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return (
            self.p == other.p
            and self.data.shape == other.data.shape
            and bool((self.data == other.data).all())
        )

    def __repr__(self):
        return f"FieldMatrix(p={self.p}, {self.tolist()})"


def _eliminate(data: np.ndarray, p: int):
    """Gauss-Jordan elimination; returns (rref array, pivot columns)."""
    M = data.copy()
    rows, cols = M.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(M[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            M[[r, piv]] = M[[piv, r]]
        M[r] = F.scale(M[r], pow(int(M[r, c]), -1, p), p)
        others = np.nonzero(M[:, c])[0]
        others = others[others != r]
        if others.size:
            factors = M[others, c][:, None]
            M[others] = F.sub(M[others], F.mul(factors, M[r][None, :], p), p)
        pivots.append(c)
        r += 1
    return M, pivots


def rref(m: FieldMatrix) -> FieldMatrix:
    reduced, _ = _eliminate(m.data, m.p)
    return FieldMatrix(m.p, reduced)


def rank(m: FieldMatrix) -> int:
    return len(_eliminate(m.data, m.p)[1])


def invert(m: FieldMatrix) -> FieldMatrix:
    n = m.rows
    if n != m.cols:
        raise DimensionError("only square matrices are invertible")
    aug = np.concatenate([m.data, FieldMatrix.identity(n, m.p).data], axis=1)
    reduced, pivots = _eliminate(aug, m.p)
    if pivots[:n] != list(range(n)):
        raise SingularMatrixError("matrix is singular over the field")
    return FieldMatrix(m.p, np.ascontiguousarray(reduced[:, n:]))


def mat_vec(m: FieldMatrix, v) -> np.ndarray:
    vec = F.as_vector(v, m.p)
    if vec.shape != (m.cols,):
        raise DimensionError(f"vector of length {vec.shape} does not match {m.cols} columns")
    return F.matmul(m.data, vec.reshape(-1, 1), m.p).ravel()


def privacy_check(m: FieldMatrix) -> bool:
    """True iff no RREF row of ``m`` has exactly one nonzero entry."""
    reduced = rref(m).data
    counts = (reduced != 0).sum(axis=1)
    return not bool((counts == 1).any())


# ---------------------------------------------------------------------------
# Freeze matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FreezeMatrixSet:
    lam: int
    delta: int
    a: FieldMatrix
    a_inv: FieldMatrix
    a_check: FieldMatrix
    alpha: FieldMatrix
    seed: int | None = None

    @property
    def p(self) -> int:
        return self.a.p

    @property
    def check_rows(self) -> int:
        return self.lam - self.delta - 1

    @property
    def key_rows(self) -> int:
        return self.delta + 1


def validate_parameters(lam: int, delta: int) -> None:
    if lam <= 2:
        raise ParameterError(f"compression factor must exceed 2 (got {lam})")
    if not 0 <= delta < lam - 1:
        raise ParameterError(f"delta must satisfy 0 <= delta < lambda - 1 (got {delta}, lambda={lam})")


def split_matrix(a: FieldMatrix, delta: int, a_inv: FieldMatrix | None = None, seed=None) -> FreezeMatrixSet:
    lam = a.rows
    validate_parameters(lam, delta)
    cut = lam - delta - 1
    inv = a_inv if a_inv is not None else invert(a)
    return FreezeMatrixSet(
        lam=lam,
        delta=delta,
        a=a,
        a_inv=inv,
        a_check=FieldMatrix(a.p, np.ascontiguousarray(a.data[:cut])),
        alpha=FieldMatrix(a.p, np.ascontiguousarray(a.data[cut:])),
        seed=seed,
    )


def generate_freeze_matrices(
    cfg: F.FieldConfig,
    lam: int,
    delta: int,
    seed: int,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> FreezeMatrixSet:
    """Rejection-sample an invertible A whose check matrix passes the privacy test."""
    validate_parameters(lam, delta)
    return _generate(cfg.p, lam, delta, int(seed), max_attempts)


@lru_cache(maxsize=64)
def _generate(p: int, lam: int, delta: int, seed: int, max_attempts: int) -> FreezeMatrixSet:
    gen = generator(seed, "freeze-matrix", p, lam, delta)
    cut = lam - delta - 1
    for _ in range(max_attempts):
        a = FieldMatrix(p, F.random_vector(gen, lam * lam, p).reshape(lam, lam))
        try:
            a_inv = invert(a)
        except SingularMatrixError:
            continue
        check = FieldMatrix(p, np.ascontiguousarray(a.data[:cut]))
        if not privacy_check(check):
            continue
        return split_matrix(a, delta, a_inv, seed=seed)
    raise GenerationError(f"no admissible matrix after {max_attempts} attempts")


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

_MAGIC = b"PVFM"
_VERSION = 1
_HEAD = struct.Struct("<4sBH")  # magic, version, byte length of p
_DIMS = struct.Struct("<IIBQ")  # lambda, delta, has_seed, seed


def dumps(ms: FreezeMatrixSet) -> bytes:
    p = ms.p
    pbytes = p.to_bytes((p.bit_length() + 7) // 8, "little")
    seed = ms.seed if ms.seed is not None else 0
    out = [
        _HEAD.pack(_MAGIC, _VERSION, len(pbytes)),
        pbytes,
        _DIMS.pack(ms.lam, ms.delta, ms.seed is not None, seed),
    ]
    width = len(pbytes)
    out.extend(v.to_bytes(width, "little") for v in ms.a.entries)
    return b"".join(out)


def loads(buf: bytes) -> FreezeMatrixSet:
    """Parse a serialised set; derived matrices are recomputed and checked."""
    magic, version, plen = _HEAD.unpack_from(buf, 0)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not a freeze-matrix file (bad magic or version)")
    off = _HEAD.size
    p = int.from_bytes(buf[off : off + plen], "little")
    off += plen
    lam, delta, has_seed, seed = _DIMS.unpack_from(buf, off)
    off += _DIMS.size
    body = buf[off:]
    if len(body) != lam * lam * plen:
        raise DimensionError("matrix body length does not match the header")
    vals = [int.from_bytes(body[i : i + plen], "little") for i in range(0, len(body), plen)]
    a = FieldMatrix(p, F.as_vector(vals, p).reshape(lam, lam))
    ms = split_matrix(a, delta, seed=seed if has_seed else None)
    ident = FieldMatrix.identity(lam, p)
    if ms.a @ ms.a_inv != ident:
        raise ValueError("reloaded matrix fails A @ A^-1 = I")
    if rank(ms.a_check) != ms.check_rows or not privacy_check(ms.a_check):
        raise ValueError("reloaded check matrix fails the element-privacy test")
    return ms
