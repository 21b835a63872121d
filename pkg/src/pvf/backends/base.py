"""Shared types for the secure-aggregation backends."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import DimensionError


@dataclass(frozen=True)
class BackendDescriptor:
    name: str
    server_learns_sum: bool
    dropout_tolerant: bool
    threshold: int | None = None


PLAIN = BackendDescriptor("plain", server_learns_sum=True, dropout_tolerant=True)
HE = BackendDescriptor("he", server_learns_sum=False, dropout_tolerant=True)


def mask_descriptor(n: int, threshold: int | None = None) -> BackendDescriptor:
    return BackendDescriptor(
        "mask", server_learns_sum=True, dropout_tolerant=True,
        threshold=default_threshold(n) if threshold is None else threshold,
    )


def default_threshold(n: int) -> int:
    return max(1, math.ceil(2 * n / 3))


@dataclass
class AggregationOutcome:
    """What the server holds after the backend finishes.

    ``sum_k`` is a plaintext field vector, or an ``EncryptedVector`` for the
    HE backend.  ``timings`` holds milliseconds: ``user`` is the mean over
    surviving users, ``server`` the server's total.
    """

    survivors: frozenset
    sum_k: Any
    per_user_bytes: dict
    timings: dict = field(default_factory=dict)
    entries: int = 0

    @property
    def max_user_bytes(self) -> int:
        return max((self.per_user_bytes[u] for u in self.survivors), default=0)


def survivors_of(inputs: Mapping, dropouts) -> list:
    drop = set(dropouts)
    unknown = drop - set(inputs)
    if unknown:
        raise ValueError(f"dropouts name unknown users {sorted(unknown)}")
    return sorted(u for u in inputs if u not in drop)


def common_length(inputs: Mapping) -> int:
    lengths = {len(v) for v in inputs.values()}
    if len(lengths) > 1:
        raise DimensionError(f"input vectors differ in length: {sorted(lengths)}")
    return lengths.pop() if lengths else 0


class Stopwatch:
    """Accumulates monotonic wall time in milliseconds."""

    def __init__(self):
        self.ms = 0.0
        self._t0 = None

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms += (time.perf_counter() - self._t0) * 1e3
        return False
