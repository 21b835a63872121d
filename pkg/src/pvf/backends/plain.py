"""Plain aggregation: the unprotected sum used as the correctness oracle."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .. import field as F
from ..errors import UnrecoverableRoundError
from .base import AggregationOutcome, Stopwatch, common_length, survivors_of


def plain_aggregate(inputs: Mapping[int, np.ndarray], dropouts=(), p: int = F.MERSENNE_61) -> AggregationOutcome:
    length = common_length(inputs)
    alive = survivors_of(inputs, dropouts)
    if not alive:
        raise UnrecoverableRoundError("no surviving users to aggregate")
    width = (p.bit_length() + 7) // 8
    with Stopwatch() as sw:
        total = F.total((inputs[u] for u in alive), p)
    return AggregationOutcome(
        survivors=frozenset(alive),
        sum_k=total,
        per_user_bytes={u: F.wire_size(length, width) for u in alive},
        timings={"user": 0.0, "server": sw.ms},
        entries=length,
    )
