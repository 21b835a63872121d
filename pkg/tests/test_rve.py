import numpy as np
import pytest

from conftest import P
from pvf import field as F
from pvf import rve
from pvf.errors import DimensionError


def keys_of(k1, k2, p=P):
    return rve.VerificationKeys(F.as_vector(k1, p), F.as_vector(k2, p), p)


def test_derive_keys_deterministic_and_nonzero():
    a = rve.derive_verification_keys(42, 1000, F.DEFAULT_FIELD)
    b = rve.derive_verification_keys(42, 1000, F.DEFAULT_FIELD)
    assert (a.kappa1 == b.kappa1).all() and (a.kappa2 == b.kappa2).all()
    assert (a.kappa1 != 0).all()
    with pytest.raises(DimensionError):
        rve.derive_verification_keys(1, 0, F.DEFAULT_FIELD)


def test_key_length_for_desk_scale():
    # l (lambda - delta - 1) = 1000 * 99
    assert len(rve.derive_verification_keys(0, 1000 * 99, F.DEFAULT_FIELD).kappa1) == 99_000


def test_mask_examples():
    k = keys_of([2], [3])
    sub = rve.mask_frozen(F.as_vector([4], P), k)
    assert int(sub.grave[0]) == 8 and int(sub.acute[0]) == 7
    zero = rve.mask_frozen(F.as_vector([0], P), k)
    assert int(zero.grave[0]) == 0 and int(zero.acute[0]) == 3
    with pytest.raises(DimensionError):
        rve.mask_frozen(F.as_vector([1, 2], P), k)


def test_single_user_check():
    res = rve.verify_frozen_sums(F.as_vector([8], P), F.as_vector([7], P), keys_of([2], [3]), 1)
    assert res.ok and [int(v) for v in res.sum_y] == [4]


def test_three_users_recover_sum(rng):
    keys = rve.derive_verification_keys(7, 30, F.DEFAULT_FIELD)
    ys = [F.random_vector(rng, 30, P) for _ in range(3)]
    subs = [rve.mask_frozen(y, keys) for y in ys]
    res = rve.verify_frozen_sums(F.total([s.grave for s in subs], P), F.total([s.acute for s in subs], P), keys, 3)
    assert res.ok and [int(v) for v in res.sum_y] == [int(v) for v in F.total(ys, P)]


def test_forged_grave_entry_detected(rng):
    keys = rve.derive_verification_keys(7, 10, F.DEFAULT_FIELD)
    ys = [F.random_vector(rng, 10, P) for _ in range(2)]
    subs = [rve.mask_frozen(y, keys) for y in ys]
    g = F.total([s.grave for s in subs], P)
    a = F.total([s.acute for s in subs], P)
    g[4] = (int(g[4]) + 1) % P
    res = rve.verify_frozen_sums(g, a, keys, 2)
    assert not res.ok and res.index == 4


def test_exhaustive_single_entry_tamper_small_field():
    p = 65537
    cfg = F.SMALL_FIELD
    keys = rve.derive_verification_keys(3, 2, cfg)
    ys = [F.as_vector([11, 250], p), F.as_vector([7, 9], p)]
    subs = [rve.mask_frozen(y, keys) for y in ys]
    g = F.total([s.grave for s in subs], p)
    a = F.total([s.acute for s in subs], p)
    assert rve.verify_frozen_sums(g, a, keys, 2).ok
    deltas = np.arange(1, p, dtype=np.uint64)
    # vectorised over every nonzero additive change at index 0
    for which in ("grave", "acute"):
        g0 = np.full(p - 1, g[0], dtype=np.uint64)
        a0 = np.full(p - 1, a[0], dtype=np.uint64)
        if which == "grave":
            g0 = F.add(g0, deltas, p)
        else:
            a0 = F.add(a0, deltas, p)
        lhs = F.mul(g0, keys.kappa1_inv[0], p)
        rhs = F.sub(a0, np.uint64(2 * int(keys.kappa2[0]) % p), p)
        assert (lhs != rhs).all()


def test_guards():
    k = keys_of([2], [3])
    with pytest.raises(DimensionError):
        rve.verify_frozen_sums(F.as_vector([1, 2], P), F.as_vector([1], P), k, 1)
    with pytest.raises(ValueError):
        rve.verify_frozen_sums(F.as_vector([1], P), F.as_vector([1], P), k, 0)
