"""Vectorised arithmetic in Z_p.

Field vectors are numpy arrays.  For p < 2**63 they use ``uint64`` so that a
sum of two reduced elements never overflows; larger moduli fall back to
``object`` arrays of Python ints.  The default modulus is the Mersenne prime
2**61 - 1, which gets dedicated multiplication kernels (no 128-bit integers
are needed, see ``_mul_m61`` and ``_matmul_m61``).

Wire format for a vector: a 4-byte little-endian length prefix followed by
fixed-width little-endian elements (8 bytes each for the default modulus).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import gmpy2
import numpy as np

from .errors import DimensionError, ParameterError, RangeError

MERSENNE_61 = (1 << 61) - 1

_M61 = np.uint64(MERSENNE_61)
_LIMB_BITS = 21
_LIMB_MASK = np.uint64((1 << _LIMB_BITS) - 1)
# float64 limb products stay exact while inner * 2**42 < 2**53
_FLOAT_INNER_CHUNK = 1 << 11

_LEN_PREFIX = struct.Struct("<I")


@dataclass(frozen=True)
class FieldConfig:
    """Prime field plus the input bounds that keep field sums wrap-free.

    ``p > n_max * max_entry`` guarantees that the modular sum of up to
    ``n_max`` raw inputs equals their integer sum.
    """

    p: int = MERSENNE_61
    max_entry: int = 2**32 - 1
    n_max: int = 2**28

    def __post_init__(self):
        if self.p < 3 or not gmpy2.is_prime(self.p, 50):
            raise ParameterError(f"modulus {self.p} is not an odd prime")
        if self.max_entry < 1 or self.n_max < 1:
            raise ParameterError("max_entry and n_max must be positive")
        if self.p <= self.n_max * self.max_entry:
            raise ParameterError(
                f"p={self.p} must exceed n_max*max_entry={self.n_max * self.max_entry}"
            )

    @property
    def width(self) -> int:
        """Bytes per serialised element."""
        return (self.p.bit_length() + 7) // 8

    @property
    def dtype(self):
        return dtype_for(self.p)

    def vector(self, values) -> np.ndarray:
        return as_vector(values, self.p)


# Small field for exhaustive tests: 65537 > 256 * 255.
SMALL_FIELD = FieldConfig(p=65537, max_entry=255, n_max=256)
DEFAULT_FIELD = FieldConfig()


def dtype_for(p: int):
    return np.uint64 if p < (1 << 63) else object


def as_vector(values, p: int) -> np.ndarray:
    """Copy ``values`` into a field vector, rejecting entries outside [0, p)."""
    dt = dtype_for(p)
    if isinstance(values, np.ndarray) and values.dtype == dt:
        arr = values.copy()
    else:
        ints = [int(v) for v in np.asarray(values, dtype=object).ravel()]
        if any(v < 0 or v >= p for v in ints):
            raise RangeError(f"vector entries must lie in [0, {p})")
        arr = np.array(ints, dtype=dt).reshape(np.shape(values))
        return arr
    if arr.size and (arr >= p).any():
        raise RangeError(f"vector entries must lie in [0, {p})")
    return arr


def zeros(shape, p: int) -> np.ndarray:
    dt = dtype_for(p)
    if dt is object:
        out = np.empty(shape, dtype=object)
        out.fill(0)
        return out
    return np.zeros(shape, dtype=dt)


# ---------------------------------------------------------------------------
# Elementwise operations
# ---------------------------------------------------------------------------


def _reduce_m61(x: np.ndarray) -> np.ndarray:
    # valid for any uint64 x; result in [0, p)
    x = (x & _M61) + (x >> np.uint64(61))
    return np.where(x >= _M61, x - _M61, x)


def _shl_mod_m61(x: np.ndarray, k: int) -> np.ndarray:
    """x * 2**k mod (2**61 - 1) for 0 <= k < 61 and uint64 x."""
    if k == 0:
        return _reduce_m61(x)
    lo = (x << np.uint64(k)) & _M61
    hi = x >> np.uint64(61 - k)
    return _reduce_m61(lo + hi)


def _limbs(x: np.ndarray):
    return (
        x & _LIMB_MASK,
        (x >> np.uint64(_LIMB_BITS)) & _LIMB_MASK,
        x >> np.uint64(2 * _LIMB_BITS),
    )


def _combine_m61(partials) -> np.ndarray:
    # partials[s] carries weight 2**(21*s)
    out = None
    for s, part in enumerate(partials):
        term = _shl_mod_m61(part, (_LIMB_BITS * s) % 61)
        out = term if out is None else _reduce_m61(out + term)
    return out


def _mul_m61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a0, a1, a2 = _limbs(a)
    b0, b1, b2 = _limbs(b)
    return _combine_m61(
        (
            a0 * b0,
            a0 * b1 + a1 * b0,
            a0 * b2 + a1 * b1 + a2 * b0,
            a1 * b2 + a2 * b1,
            a2 * b2,
        )
    )


def add(a, b, p: int) -> np.ndarray:
    if dtype_for(p) is object:
        return (a + b) % p
    s = a + b
    return np.where(s >= p, s - np.uint64(p), s)


def sub(a, b, p: int) -> np.ndarray:
    if dtype_for(p) is object:
        return (a - b) % p
    return np.where(a >= b, a - b, a + (np.uint64(p) - b))


def neg(a, p: int) -> np.ndarray:
    if dtype_for(p) is object:
        return (-a) % p
    return np.where(a == 0, a, np.uint64(p) - a)


def mul(a, b, p: int) -> np.ndarray:
    """Elementwise product with numpy broadcasting."""
    if p == MERSENNE_61:
        a, b = np.broadcast_arrays(np.asarray(a, np.uint64), np.asarray(b, np.uint64))
        return _mul_m61(a, b)
    if p < (1 << 32):
        return (np.asarray(a, np.uint64) * np.asarray(b, np.uint64)) % np.uint64(p)
    res = (np.asarray(a).astype(object) * np.asarray(b).astype(object)) % p
    return res.astype(dtype_for(p))


def scale(a, c: int, p: int) -> np.ndarray:
    return mul(a, np.asarray(int(c) % p, dtype=dtype_for(p)), p)


def total(vectors, p: int) -> np.ndarray:
    """Sum of an iterable of equal-length vectors."""
    out = None
    for v in vectors:
        out = v.copy() if out is None else add(out, v, p)
    if out is None:
        raise DimensionError("cannot sum an empty collection of vectors")
    return out


def inverse(a, p: int) -> np.ndarray:
    """Elementwise multiplicative inverse; zero entries raise ZeroDivisionError."""
    vals = [pow(int(v), -1, p) for v in np.asarray(a).ravel()]
    return np.array(vals, dtype=dtype_for(p)).reshape(np.shape(a))


# ---------------------------------------------------------------------------
# Matrix products
# ---------------------------------------------------------------------------


def _matmul_m61(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    rows, inner = A.shape
    cols = B.shape[1]
    # one BLAS call per chunk: block (i, j) of the product is limb_i(A) @ limb_j(B)
    la = np.concatenate([l.astype(np.float64) for l in _limbs(A)], axis=0)
    partials = None
    for start in range(0, inner, _FLOAT_INNER_CHUNK):
        stop = min(inner, start + _FLOAT_INNER_CHUNK)
        lb = np.concatenate([l.astype(np.float64) for l in _limbs(B[start:stop])], axis=1)
        blocks = (la[:, start:stop] @ lb).astype(np.uint64)
        # each block < 2**53, so sums of at most three stay below 2**55
        chunk = [
            sum(blocks[i * rows : (i + 1) * rows, (s - i) * cols : (s - i + 1) * cols] for i in range(3) if 0 <= s - i < 3)
            for s in range(5)
        ]
        if partials is None:
            partials = chunk
        else:
            partials = [_reduce_m61(a) + b for a, b in zip(partials, chunk)]
    return _combine_m61(partials)


def matmul(A: np.ndarray, B: np.ndarray, p: int) -> np.ndarray:
    """Exact matrix product A @ B over Z_p (A, B are 2-D field arrays)."""
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    if p == MERSENNE_61:
        return _matmul_m61(A, B)
    if p < (1 << 32):
        step = max(1, ((1 << 64) - 1) // ((p - 1) ** 2))
        out = np.zeros((A.shape[0], B.shape[1]), dtype=np.uint64)
        for s in range(0, A.shape[1], step):
            part = A[:, s : s + step].astype(np.uint64) @ B[s : s + step].astype(np.uint64)
            out = (out + part % np.uint64(p)) % np.uint64(p)
        return out
    res = (A.astype(object) @ B.astype(object)) % p
    return res.astype(dtype_for(p))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def random_vector(gen: np.random.Generator, size: int, p: int, low: int = 0) -> np.ndarray:
    """Uniform elements of [low, p)."""
    if dtype_for(p) is object:
        nbytes = (p.bit_length() + 7) // 8 + 8
        vals = [low + int.from_bytes(gen.bytes(nbytes), "little") % (p - low) for _ in range(size)]
        return np.array(vals, dtype=object)
    return gen.integers(low, p, size=size, dtype=np.uint64)


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------


def wire_size(count: int, width: int) -> int:
    """Encoded size of a length-prefixed vector of ``count`` fixed-width elements."""
    return _LEN_PREFIX.size + count * width


def encode_vector(v: np.ndarray, p: int) -> bytes:
    width = (p.bit_length() + 7) // 8
    head = _LEN_PREFIX.pack(len(v))
    if width == 8 and v.dtype == np.uint64:
        return head + v.astype("<u8").tobytes()
    return head + b"".join(int(x).to_bytes(width, "little") for x in v)


def decode_vector(buf: bytes, p: int, offset: int = 0):
    """Decode one vector from ``buf``; returns ``(vector, next_offset)``."""
    width = (p.bit_length() + 7) // 8
    (count,) = _LEN_PREFIX.unpack_from(buf, offset)
    offset += _LEN_PREFIX.size
    end = offset + count * width
    if end > len(buf):
        raise DimensionError("truncated vector encoding")
    body = buf[offset:end]
    if width == 8 and dtype_for(p) is np.uint64:
        vec = np.frombuffer(body, dtype="<u8").astype(np.uint64)
    else:
        vec = np.array(
            [int.from_bytes(body[i : i + width], "little") for i in range(0, len(body), width)],
            dtype=dtype_for(p),
        )
    if vec.size and (vec >= p).any():
        raise RangeError("decoded element outside the field")
    return vec, end
