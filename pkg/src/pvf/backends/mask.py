"""Pairwise-masking secure aggregation with dropout recovery.

Round structure for users U (ids are integers, ordered):

1. every user advertises a DH public key;
2. every user Shamir-shares its DH secret and a self-mask seed ``b_i`` to
   all users with threshold ``t``;
3. every surviving user uploads ``x_i + PRG(b_i) + sum_j sign(i, j) PRG(s_ij)``
   where ``sign`` is ``+`` for ``i < j`` and ``-`` otherwise;
4. survivors reveal shares of ``b_i`` for survivors and of the DH secret
   for dropped users, and the server strips every remaining mask.

Dropped users finish steps 1 and 2, then go silent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .. import field as F
from ..errors import ParameterError, ReconstructionError, UnrecoverableRoundError
from ..rng import generator, randbelow
from .base import AggregationOutcome, Stopwatch, common_length, default_threshold, survivors_of
from .dh import DHGroup, agree, derive_seed, dh_group, keygen
from .prg import prg_vector
from .shamir import SHAMIR_PRIME, ShamirDecoder, ShamirShare, shamir_share

SHARE_BYTES = (SHAMIR_PRIME.bit_length() + 7) // 8
SELF_SEED_BITS = 256


@dataclass(frozen=True)
class DealtShares:
    owner: int
    secret_key: ShamirShare
    self_seed: ShamirShare


@dataclass
class MaskUser:
    uid: int
    group: DHGroup
    p: int
    sk: int
    pk: int
    self_seed: int
    seed: int

    @classmethod
    def create(cls, uid: int, group: DHGroup, p: int, seed: int) -> "MaskUser":
        gen = generator(seed, "mask-user", uid)
        sk, pk = keygen(group, gen)
        return cls(uid, group, p, sk, pk, randbelow(gen, 1 << SELF_SEED_BITS), seed)

    def deal(self, holders, t: int) -> dict:
        """Shares of (DH secret, self-mask seed) keyed by holder."""
        holders = sorted(holders)
        gen = generator(self.seed, "deal", self.uid)
        sk_sh = shamir_share(self.sk, t, len(holders), gen, holders=holders)
        b_sh = shamir_share(self.self_seed, t, len(holders), gen, holders=holders)
        return {a.holder: DealtShares(self.uid, a, b) for a, b in zip(sk_sh, b_sh)}

    def pair_seed(self, peer: int, peer_pk: int) -> bytes:
        lo, hi = sorted((self.uid, peer))
        return pair_seed_from(agree(self.group, self.sk, peer_pk), self.group, lo, hi)

    def self_mask(self, length: int) -> np.ndarray:
        return prg_vector(self.self_seed, length, self.p)

    def mask(self, x: np.ndarray, pks: Mapping[int, int]) -> np.ndarray:
        p = self.p
        out = F.add(x, self.self_mask(len(x)), p)
        for j, pk in sorted(pks.items()):
            if j == self.uid:
                continue
            pad = prg_vector(self.pair_seed(j, pk), len(x), p)
            out = F.add(out, pad, p) if self.uid < j else F.sub(out, pad, p)
        return out

    @staticmethod
    def reveal(held: Mapping[int, DealtShares], survivors, dropped) -> dict:
        """Shares this user hands the server during unmasking."""
        out = {}
        for owner in survivors:
            out[("b", owner)] = held[owner].self_seed
        for owner in dropped:
            out[("sk", owner)] = held[owner].secret_key
        return out


def pair_seed_from(shared: int, group: DHGroup, lo: int, hi: int) -> bytes:
    return derive_seed(shared, group, f"pair/{lo}/{hi}".encode())


class MaskServer:
    def __init__(self, group: DHGroup, p: int, t: int):
        self.group, self.p, self.t = group, p, t

    def unmask(self, masked: Mapping[int, np.ndarray], revealed: Mapping[int, dict], pks: Mapping[int, int], dropped) -> np.ndarray:
        survivors = sorted(masked)
        if len(revealed) < self.t:
            raise UnrecoverableRoundError(
                f"only {len(revealed)} users revealed shares; threshold is {self.t}"
            )
        holders = sorted(revealed)
        decoder = ShamirDecoder([h + 1 for h in holders], self.t)

        def secret(kind, owner):
            try:
                shares = [revealed[h][(kind, owner)] for h in holders]
            except KeyError:
                raise ReconstructionError(f"missing {kind} share for user {owner}") from None
            if any(s.holder != h for s, h in zip(shares, holders)):
                raise ReconstructionError("share attributed to the wrong holder")
            return decoder.decode([s.y for s in shares])

        p = self.p
        length = common_length(masked)
        total = F.total((masked[u] for u in survivors), p)
        for u in survivors:
            total = F.sub(total, prg_vector(secret("b", u), length, p), p)
        for d in sorted(dropped):
            sk_d = secret("sk", d)
            for j in survivors:
                lo, hi = sorted((d, j))
                pad = prg_vector(pair_seed_from(agree(self.group, sk_d, pks[j]), self.group, lo, hi), length, p)
                # survivor j added the pad when j < d
                total = F.sub(total, pad, p) if j < d else F.add(total, pad, p)
        return total


def mask_backend_round(
    inputs: Mapping[int, np.ndarray],
    dropouts=(),
    t: int | None = None,
    seed: int = 0,
    p: int = F.MERSENNE_61,
    profile: str = "test",
) -> AggregationOutcome:
    length = common_length(inputs)
    users = sorted(inputs)
    n = len(users)
    t = default_threshold(n) if t is None else t
    if not 1 <= t <= n:
        raise ParameterError(f"threshold t={t} outside [1, {n}]")
    alive = survivors_of(inputs, dropouts)
    dropped = sorted(set(users) - set(alive))
    if len(alive) < t:
        raise UnrecoverableRoundError(f"{len(alive)} survivors cannot meet threshold {t}")
    group = dh_group(profile)
    width = (p.bit_length() + 7) // 8
    clocks = {u: Stopwatch() for u in users}
    sent = {u: 0 for u in users}

    # advertise keys
    parties = {}
    for u in users:
        with clocks[u]:
            parties[u] = MaskUser.create(u, group, p, seed)
        sent[u] += group.width
    pks = {u: parties[u].pk for u in users}

    # share secrets; each user keeps its own share and sends n-1
    held = {u: {} for u in users}
    for u in users:
        with clocks[u]:
            dealt = parties[u].deal(users, t)
        for h, sh in dealt.items():
            held[h][u] = sh
        sent[u] += (n - 1) * 2 * SHARE_BYTES

    # masked uploads from survivors only
    masked = {}
    for u in alive:
        with clocks[u]:
            masked[u] = parties[u].mask(inputs[u], pks)
        sent[u] += F.wire_size(length, width)

    revealed = {}
    for u in alive:
        with clocks[u]:
            revealed[u] = MaskUser.reveal(held[u], alive, dropped)
        sent[u] += len(revealed[u]) * SHARE_BYTES

    server = MaskServer(group, p, t)
    with Stopwatch() as sw:
        total = server.unmask(masked, revealed, pks, dropped)
    return AggregationOutcome(
        survivors=frozenset(alive),
        sum_k=total,
        per_user_bytes={u: sent[u] for u in alive},
        timings={"user": float(np.mean([clocks[u].ms for u in alive])), "server": sw.ms},
        entries=length,
    )
