from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import P
from pvf import field as F
from pvf.core import (
    ThawInput,
    compression_ratio,
    freeze,
    key_length,
    pad_and_group,
    padded_length,
    thaw,
)
from pvf.errors import DimensionError, RangeError
from pvf.linalg import generate_freeze_matrices, split_matrix


def ints(v):
    return [int(x) for x in v]


@pytest.mark.parametrize("m,lam,want", [(5, 3, 6), (6, 3, 6), (100_000, 100, 100_000), (1, 7, 7)])
def test_padded_length(m, lam, want):
    assert padded_length(m, lam) == want


def test_pad_and_group_shapes(a3_set):
    xp = pad_and_group([1, 2, 3, 4, 5], a3_set, seed=1)
    assert (len(xp.entries), xp.groups, xp.pad_len) == (6, 2, 1)
    assert ints(xp.entries[:5]) == [1, 2, 3, 4, 5]
    assert xp.grouped().shape == (3, 2)
    assert ints(xp.grouped()[:, 1]) == ints(xp.entries[3:6])
    assert pad_and_group(list(range(6)), a3_set, seed=1).pad_len == 0


def test_padding_is_seeded(a3_set):
    a = pad_and_group([1], a3_set, seed=5).entries
    b = pad_and_group([1], a3_set, seed=5).entries
    c = pad_and_group([1], a3_set, seed=6).entries
    assert ints(a) == ints(b) and ints(a) != ints(c)


def test_pad_rejects_out_of_range(a3_set):
    with pytest.raises(RangeError):
        pad_and_group([P], a3_set, seed=0)


def test_freeze_worked_example(a3_set, a3):
    fp = freeze(pad_and_group([1, 2, 3], a3_set, seed=0), a3_set)
    assert ints(fp.y) == [14, 16] and ints(fp.k) == [17]
    fp1 = freeze(pad_and_group([1, 2, 3], split_matrix(a3, 1), seed=0), split_matrix(a3, 1))
    assert ints(fp1.y) == [14] and ints(fp1.k) == [16, 17]
    zero = freeze(pad_and_group([0, 0, 0], a3_set, seed=0), a3_set)
    assert ints(zero.y) == [0, 0] and ints(zero.k) == [0]


def test_thaw_worked_example(a3_set):
    inp = ThawInput(F.as_vector([14, 16], P), F.as_vector([17], P), a3_set, 3)
    assert ints(thaw(inp)) == [1, 2, 3]


def test_thaw_of_opposite_users_is_zero(a3_set, rng):
    x = F.random_vector(rng, 9, P)
    fa = freeze(pad_and_group(x, a3_set, 0), a3_set)
    fb = freeze(pad_and_group(F.neg(x, P), a3_set, 0), a3_set)
    inp = ThawInput(F.add(fa.y, fb.y, P), F.add(fa.k, fb.k, P), a3_set, 9)
    assert not thaw(inp).any()


def test_thaw_rejects_mismatched_sums(a3_set):
    with pytest.raises(DimensionError):
        thaw(ThawInput(F.as_vector([1, 2, 3], P), F.as_vector([1], P), a3_set, 3))
    with pytest.raises(DimensionError):
        thaw(ThawInput(F.as_vector([1, 2], P), F.as_vector([1], P), a3_set, 4))


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 6),
    m=st.integers(1, 40),
    lam=st.integers(3, 9),
    delta_frac=st.floats(0, 0.999),
    seed=st.integers(0, 2**31),
)
def test_freeze_thaw_recovers_plain_sum(n, m, lam, delta_frac, seed):
    delta = int(delta_frac * (lam - 1))
    ms = generate_freeze_matrices(F.DEFAULT_FIELD, lam, delta, seed=seed % 5)
    gen = np.random.default_rng(seed)
    xs = [F.random_vector(gen, m, P) for _ in range(n)]
    frozen = [freeze(pad_and_group(x, ms, seed + i), ms) for i, x in enumerate(xs)]
    assert len(frozen[0].k) == key_length(m, lam, delta)
    out = thaw(ThawInput(F.total([f.y for f in frozen], P), F.total([f.k for f in frozen], P), ms, m))
    assert ints(out) == ints(F.total(xs, P))


def test_five_users_lambda4_delta1(rng):
    ms = generate_freeze_matrices(F.DEFAULT_FIELD, 4, 1, seed=2)
    xs = [F.random_vector(rng, 10, P) for _ in range(5)]
    fr = [freeze(pad_and_group(x, ms, i), ms) for i, x in enumerate(xs)]
    out = thaw(ThawInput(F.total([f.y for f in fr], P), F.total([f.k for f in fr], P), ms, 10))
    assert ints(out) == [sum(int(x[i]) for x in xs) % P for i in range(10)]


@pytest.mark.parametrize("lam,delta,want", [(100, 0, Fraction(1, 100)), (100, 9, Fraction(1, 10)), (3, 1, Fraction(2, 3))])
def test_compression_ratio(lam, delta, want):
    assert compression_ratio(generate_freeze_matrices(F.DEFAULT_FIELD, lam, delta, seed=0)) == want
