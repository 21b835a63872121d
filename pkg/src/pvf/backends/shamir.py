"""(t, n) Shamir secret sharing over a prime field."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..errors import ParameterError, ReconstructionError
from ..rng import randbelow

# 2**521 - 1 comfortably holds DH exponents and 256-bit seeds.
SHAMIR_PRIME = (1 << 521) - 1


@dataclass(frozen=True)
class ShamirShare:
    holder: int
    x: int
    y: int


def shamir_share(secret: int, t: int, n: int, gen, prime: int = SHAMIR_PRIME, holders=None) -> list[ShamirShare]:
    """Shares for holders ``0..n-1`` (evaluation points 1..n) unless given."""
    if not 1 <= t <= n:
        raise ParameterError(f"threshold must satisfy 1 <= t <= n (t={t}, n={n})")
    if not 0 <= secret < prime:
        raise ParameterError("secret outside the sharing field")
    holders = list(range(n)) if holders is None else list(holders)
    if len(holders) != n:
        raise ParameterError("need exactly n holders")
    coeffs = [secret] + [randbelow(gen, prime) for _ in range(t - 1)]
    shares = []
    for h in holders:
        x = h + 1
        acc = 0
        for c in reversed(coeffs):
            acc = (acc * x + c) % prime
        shares.append(ShamirShare(holder=h, x=x, y=acc))
    return shares


def lagrange_at_zero(xs: list[int], prime: int = SHAMIR_PRIME) -> list[int]:
    coeffs = []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if j != i:
                num = num * xj % prime
                den = den * (xj - xi) % prime
        coeffs.append(num * pow(den, -1, prime) % prime)
    return coeffs


def shamir_reconstruct(shares: Iterable[ShamirShare], t: int, prime: int = SHAMIR_PRIME) -> int:
    shares = list(shares)
    if len(shares) < t:
        raise ReconstructionError(f"need {t} shares, got {len(shares)}")
    return ShamirDecoder([s.x for s in shares], t, prime).decode([s.y for s in shares])


class ShamirDecoder:
    """Reconstructs many secrets that were shared to the same holder set.

    Lagrange weights depend only on the evaluation points, so they are
    computed once.  Shares beyond the first ``t`` are checked against the
    interpolated polynomial; a mismatch means the share sets disagree.
    """

    def __init__(self, xs, t: int, prime: int = SHAMIR_PRIME):
        xs = list(xs)
        if len(xs) < t:
            raise ReconstructionError(f"need {t} shares, got {len(xs)}")
        if len(set(xs)) != len(xs) or any(x % prime == 0 for x in xs):
            raise ReconstructionError("evaluation points must be distinct and nonzero")
        self.xs, self.t, self.prime = xs, t, prime
        base = xs[:t]
        self._at_zero = lagrange_at_zero(base, prime)
        # weights that evaluate the degree t-1 interpolant at each extra point
        self._extra = [_lagrange_at(base, x, prime) for x in xs[t:]]

    def decode(self, ys) -> int:
        ys = list(ys)
        if len(ys) != len(self.xs):
            raise ReconstructionError("share count does not match the decoder's points")
        q = self.prime
        head = ys[: self.t]
        for w, y in zip(self._extra, ys[self.t :]):
            if sum(a * b for a, b in zip(w, head)) % q != y:
                raise ReconstructionError("inconsistent share set")
        return sum(c * y for c, y in zip(self._at_zero, head)) % q


def _lagrange_at(xs: list[int], at: int, prime: int) -> list[int]:
    out = []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if j != i:
                num = num * (at - xj) % prime
                den = den * (xi - xj) % prime
        out.append(num * pow(den, -1, prime) % prime)
    return out
