"""Round simulator: setup, freeze, secure aggregation, verification, thaw.

Users run in-process.  Every message a surviving user would send is counted
in bytes; phase timings use a monotonic clock.  ``lam == 1`` is the no-PVF
baseline: freeze and thaw become identity maps and the backend aggregates x
directly, so both sides of an improvement factor share one code path.
"""

from __future__ import annotations

import dataclasses
import math
import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Mapping

import numpy as np

from . import commit as uce
from . import field as F
from . import rve
from .backends import paillier
from .backends.base import HE, PLAIN, AggregationOutcome, mask_descriptor
from .backends.mask import mask_backend_round
from .backends.plain import plain_aggregate
from .core import PaddedVector, ThawInput, freeze, freeze_with, key_length, pad_and_group, thaw
from .errors import CommitmentMismatch, ConfigurationError, DimensionError, ParameterError, ResultForgery
from .field import FieldConfig
from .linalg import FieldMatrix, generate_freeze_matrices, validate_parameters
from .rng import derive_seed, generator

BACKENDS = ("plain", "mask", "he")
EXTENSIONS = ("none", "uce", "rve")
THAW_SIDES = ("server", "user")
TAMPERS = ("user-inconsistent-freeze", "user-wrong-alpha", "server-forge-sum-y")
ETA_WARN = 0.3


@dataclass(frozen=True)
class RoundConfig:
    n: int = 10
    m: int = 1000
    lam: int = 10
    delta: int = 0
    eta: float = 0.0
    backend: str = "mask"
    extension: str = "none"
    thaw_side: str | None = None  # None picks the only legal side, else server
    seed: int = 0
    profile: str = "test"
    threshold: int | None = None
    field: FieldConfig = F.DEFAULT_FIELD

    def __post_init__(self):
        if self.thaw_side is None:
            side = "user" if self.backend == "he" or self.extension == "rve" else "server"
            object.__setattr__(self, "thaw_side", side)
        self.validate()

    def validate(self) -> None:
        if self.n < 1 or self.m < 1:
            raise ParameterError("n and m must be positive")
        if self.n > self.field.n_max:
            raise ParameterError(f"n={self.n} exceeds the field's n_max")
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"unknown backend {self.backend!r}")
        if self.extension not in EXTENSIONS:
            raise ConfigurationError(f"unknown extension {self.extension!r}")
        if self.thaw_side not in THAW_SIDES:
            raise ConfigurationError(f"unknown thaw side {self.thaw_side!r}")
        if self.profile not in uce.PROFILES:
            raise ConfigurationError(f"unknown profile {self.profile!r}")
        if not 0 <= self.eta < 1:
            raise ParameterError("dropout rate must lie in [0, 1)")
        if self.eta > ETA_WARN:
            warnings.warn(f"dropout rate {self.eta} is above {ETA_WARN}", stacklevel=3)
        if self.lam == 1:
            if self.delta != 0:
                raise ParameterError("the lambda = 1 baseline takes delta = 0")
        else:
            validate_parameters(self.lam, self.delta)
        if self.backend == "he" and self.thaw_side != "user":
            raise ConfigurationError("HE backend: the server never sees the plaintext key sum, so it cannot thaw")
        if self.extension == "uce":
            if self.thaw_side != "server" or not self.descriptor.server_learns_sum:
                raise ConfigurationError("UCE needs server-side thaw over a backend that reveals the sum")
        if self.extension == "rve":
            if self.thaw_side != "user":
                raise ConfigurationError("RVE needs user-side thaw")
            if self.lam == 1:
                raise ConfigurationError("RVE has no frozen vector to verify at lambda = 1")
        if self.backend == "mask":
            t = self.descriptor.threshold
            if not 1 <= t <= self.n:
                raise ParameterError(f"threshold t={t} outside [1, {self.n}]")

    @property
    def descriptor(self):
        if self.backend == "mask":
            return mask_descriptor(self.n, self.threshold)
        return HE if self.backend == "he" else PLAIN

    @property
    def dropout_count(self) -> int:
        return math.floor(self.eta * self.n + 1e-9)

    @property
    def backend_entries(self) -> int:
        return self.m if self.lam == 1 else key_length(self.m, self.lam, self.delta)


@dataclass
class RoundReport:
    config: RoundConfig
    survivors: tuple = ()
    aggregate: np.ndarray | None = None
    timings: dict = field(default_factory=dict)
    per_user_bytes: dict = field(default_factory=dict)
    backend_entries: int = 0
    correctness: bool = False
    error: str | None = None
    rep: int = 0

    @property
    def user_bytes(self) -> int:
        return max(self.per_user_bytes.values(), default=0)


# ---------------------------------------------------------------------------
# Setup helpers
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4)
def he_keys(profile: str) -> paillier.Keypair:
    return paillier.keygen(paillier.KEY_BITS[profile], seed=derive_seed(0, "he-keys", profile))


def pedersen_params(profile: str) -> uce.PedersenParams:
    return uce.pc_setup(profile, seed=0)


def make_inputs(cfg: RoundConfig, seed: int | None = None) -> dict:
    """Uniform raw inputs in [0, max_entry]; independent of lambda and delta."""
    seed = cfg.seed if seed is None else seed
    hi = cfg.field.max_entry
    return {
        u: generator(seed, "input", u).integers(0, hi, size=cfg.m, dtype=np.uint64, endpoint=True).astype(cfg.field.dtype)
        for u in range(cfg.n)
    }


def draw_dropouts(cfg: RoundConfig) -> frozenset:
    k = cfg.dropout_count
    if k == 0:
        return frozenset()
    pick = generator(cfg.seed, "dropouts").choice(cfg.n, size=k, replace=False)
    return frozenset(int(u) for u in pick)


class _Timer:
    def __init__(self):
        self.t = {}

    def add(self, key, ms):
        self.t[key] = self.t.get(key, 0.0) + ms

    @contextmanager
    def measure(self, key):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.add(key, (time.perf_counter() - t0) * 1e3)


@dataclass
class _UserState:
    xp: PaddedVector | None
    y: np.ndarray
    k: np.ndarray
    commitments: uce.CommitmentVector | None = None
    masked: rve.MaskedFrozenSubmission | None = None


# ---------------------------------------------------------------------------
# Tampering
# ---------------------------------------------------------------------------


def _tampered_freeze(kind: str, xp: PaddedVector, ms, gen):
    """Frozen pair from a deviating user; k always differs from the honest k."""
    honest = freeze(xp, ms)
    p = ms.p
    for _ in range(100):
        if kind == "user-inconsistent-freeze":
            other = xp.entries.copy()
            r = int(gen.integers(len(other)))
            other[r] = F.add(other[r : r + 1], F.random_vector(gen, 1, p, low=1), p)[0]
            alt = PaddedVector(xp.original_len, other, xp.lam, xp.pad_seed)
            fp = freeze_with(alt, ms.a_check, ms.alpha)
            fp = dataclasses.replace(fp, y=honest.y)
        else:
            rows = F.random_vector(gen, ms.key_rows * ms.lam, p).reshape(ms.key_rows, ms.lam)
            fp = freeze_with(xp, ms.a_check, FieldMatrix(p, rows))
        if (fp.k != honest.k).any():
            return fp
    raise RuntimeError("could not build a tampered key vector")


# ---------------------------------------------------------------------------
# Round
# ---------------------------------------------------------------------------


def run_round(cfg: RoundConfig, inputs: Mapping[int, np.ndarray] | None = None) -> RoundReport:
    """Run one honest round and check the aggregate against plain summation."""
    return _run(cfg, inputs, tamper=None)


def run_adversarial_round(cfg: RoundConfig, inputs=None, tamper: str = "server-forge-sum-y", target: int | None = None) -> RoundReport:
    """Round with one deviating party.

    With the extension that covers the tamper the round aborts with
    ``CommitmentMismatch`` (users) or ``ResultForgery`` (server).  Otherwise
    it completes and ``correctness`` reports the damage.
    """
    if tamper not in TAMPERS:
        raise ParameterError(f"unknown tamper {tamper!r}; choose from {TAMPERS}")
    if cfg.lam == 1:
        raise ConfigurationError("tampering targets frozen vectors, which need lambda > 2")
    return _run(cfg, inputs, tamper=(tamper, target))


def _run(cfg: RoundConfig, inputs, tamper) -> RoundReport:
    p = cfg.field.p
    if inputs is None:
        inputs = make_inputs(cfg)
    if sorted(inputs) != list(range(cfg.n)):
        raise DimensionError(f"expected inputs for users 0..{cfg.n - 1}")
    xs = {u: F.as_vector(inputs[u], p) for u in range(cfg.n)}
    if any(len(x) != cfg.m for x in xs.values()):
        raise DimensionError(f"every input must have length m={cfg.m}")
    dropped = draw_dropouts(cfg)
    alive = [u for u in range(cfg.n) if u not in dropped]
    baseline = cfg.lam == 1
    width = cfg.field.width

    # setup: public parameters, not timed
    ms = None if baseline else generate_freeze_matrices(cfg.field, cfg.lam, cfg.delta, seed=cfg.seed)
    params = pedersen_params(cfg.profile) if cfg.extension == "uce" else None
    keys = None
    if cfg.extension == "rve":
        rve_len = cfg.backend_entries // (cfg.delta + 1) * ms.check_rows
        keys = rve.derive_verification_keys(derive_seed(cfg.seed, "rve-group"), rve_len, cfg.field)
    he_kp = he_keys(cfg.profile) if cfg.backend == "he" else None

    kind, target = tamper if tamper else (None, None)
    tgen = generator(cfg.seed, "tamper")
    if kind and kind.startswith("user") and target is None:
        target = int(tgen.choice(alive))

    timer = _Timer()
    user_clock = {u: 0.0 for u in range(cfg.n)}
    states = {}
    for u in range(cfg.n):
        t0 = time.perf_counter()
        if baseline:
            xp = PaddedVector(cfg.m, xs[u], 1) if params else None
            st = _UserState(xp, F.zeros(0, p), xs[u])
        else:
            xp = pad_and_group(xs[u], ms, seed=derive_seed(cfg.seed, "pad", u))
            fp = _tampered_freeze(kind, xp, ms, tgen) if u == target else freeze(xp, ms)
            st = _UserState(xp, fp.y, fp.k)
        if params:
            st.commitments = uce.commit_vector(params, st.xp, seed=derive_seed(cfg.seed, "zeta", u))
        if keys:
            st.masked = rve.mask_frozen(st.y, keys)
        user_clock[u] += (time.perf_counter() - t0) * 1e3
        states[u] = st
    timer.add("freeze", float(np.mean([user_clock[u] for u in alive])))

    # backend over key vectors
    ks = {u: states[u].k for u in range(cfg.n)}
    outcome = _aggregate(cfg, ks, dropped, he_kp)
    if outcome.entries != cfg.backend_entries:
        raise DimensionError(f"backend saw {outcome.entries} entries, expected {cfg.backend_entries}")
    if set(outcome.survivors) != set(alive):
        raise RuntimeError("backend survivor set differs from the dropout schedule")
    timer.add("user_secagg", outcome.timings["user"])
    timer.add("server_secagg", outcome.timings["server"])

    # server sums the frozen vectors (or their masked forms)
    with timer.measure("ysum"):
        if keys:
            sum_grave = F.total((states[u].masked.grave for u in alive), p)
            sum_acute = F.total((states[u].masked.acute for u in alive), p)
        elif not baseline:
            sum_y = F.total((states[u].y for u in alive), p)
    if kind == "server-forge-sum-y":
        r = int(tgen.integers(len(sum_acute) if keys else len(sum_y)))
        bump = F.random_vector(tgen, 1, p, low=1)
        if keys:
            if tgen.integers(2):  # forge either masked channel
                sum_grave = sum_grave.copy()
                sum_grave[r] = F.add(sum_grave[r : r + 1], bump, p)[0]
            else:
                sum_acute = sum_acute.copy()
                sum_acute[r] = F.add(sum_acute[r : r + 1], bump, p)[0]
        else:
            sum_y = sum_y.copy()
            sum_y[r] = F.add(sum_y[r : r + 1], bump, p)[0]

    # RVE verification and HE decryption happen on the user side
    if keys:
        with timer.measure("verify"):
            check = rve.verify_frozen_sums(sum_grave, sum_acute, keys, len(alive))
        if not check.ok:
            raise ResultForgery(f"masked frozen sums disagree at index {check.index}", check.index)
        sum_y = check.sum_y

    with timer.measure("thaw"):
        if cfg.backend == "he":
            sum_k = paillier.decrypt_sum(he_kp.private, outcome.sum_k, p)
        else:
            sum_k = outcome.sum_k
        if baseline:
            padded = sum_k
        else:
            padded = thaw(ThawInput(sum_y, sum_k, ms, cfg.m), truncate=False)
        aggregate = padded[: cfg.m]

    if params:
        with timer.measure("verify"):
            zeta_total = uce.zeta_sums([states[u].commitments for u in alive], params.q)
            res = uce.verify_aggregate_commitments(
                params, {u: states[u].commitments for u in alive}, padded, zeta_total, p
            )
        if not res.ok:
            raise CommitmentMismatch(f"aggregate commitments fail at position {res.index}", res.index)

    per_user = {}
    for u in alive:
        b = outcome.per_user_bytes[u]
        if keys:
            b += 2 * F.wire_size(len(states[u].y), width)
        elif not baseline:
            b += F.wire_size(len(states[u].y), width)
        if params:
            b += uce.commitment_wire_size(params, len(states[u].xp.entries))
        per_user[u] = b

    oracle = plain_aggregate(xs, dropped, p).sum_k
    t = dict(timer.t)
    for key in ("freeze", "user_secagg", "server_secagg", "ysum", "verify", "thaw"):
        t.setdefault(key, 0.0)
    user_side = cfg.thaw_side == "user"
    t["user"] = t["freeze"] + t["user_secagg"] + (t["verify"] if keys else 0.0) + (t["thaw"] if user_side else 0.0)
    t["server"] = t["server_secagg"] + t["ysum"] + (t["verify"] if params else 0.0) + (0.0 if user_side else t["thaw"])
    t["total"] = t["user"] + t["server"]
    return RoundReport(
        config=cfg,
        survivors=tuple(alive),
        aggregate=aggregate,
        timings=t,
        per_user_bytes=per_user,
        backend_entries=outcome.entries,
        correctness=bool(np.array_equal(aggregate, oracle)),
    )


def _aggregate(cfg: RoundConfig, ks, dropped, he_kp) -> AggregationOutcome:
    p = cfg.field.p
    if cfg.backend == "plain":
        return plain_aggregate(ks, dropped, p)
    if cfg.backend == "mask":
        return mask_backend_round(
            ks, dropped, t=cfg.descriptor.threshold, seed=derive_seed(cfg.seed, "mask"), p=p, profile=cfg.profile
        )
    return paillier.he_backend_round(ks, dropped, he_kp, seed=derive_seed(cfg.seed, "he"), p=p)


# ---------------------------------------------------------------------------
# Campaigns and config files
# ---------------------------------------------------------------------------

_GRID_KEYS = {"lam", "delta", "n", "m", "eta", "backend", "extension", "thaw_side", "profile"}


def campaign_cells(base: RoundConfig, grid: Mapping[str, list]) -> list[dict]:
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ParameterError("the sweep grid must be nonempty")
    unknown = set(grid) - _GRID_KEYS
    if unknown:
        raise ParameterError(f"cannot sweep over {sorted(unknown)}")
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in product(*(grid[k] for k in keys))]


def rep_seed(base_seed: int, rep: int) -> int:
    """Seed for one repetition, shared by every cell so cells see the same inputs."""
    return derive_seed(base_seed, "rep", rep) % (1 << 62)


def run_campaign(base: RoundConfig, grid: Mapping[str, list], reps: int = 5, on_report=None) -> list[RoundReport]:
    """Cartesian sweep; per-round failures are recorded, not raised."""
    if reps < 1:
        raise ParameterError("need at least one repetition")
    reports = []
    for cell in campaign_cells(base, grid):
        for rep in range(reps):
            seed = rep_seed(base.seed, rep)
            try:
                cfg = dataclasses.replace(base, seed=seed, **cell)
            except Exception as exc:  # recorded per row
                report = RoundReport(config=_loose_config(base, cell, seed), error=_describe(exc))
            else:
                try:
                    report = run_round(cfg)
                except Exception as exc:  # recorded per row
                    report = RoundReport(config=cfg, error=_describe(exc))
            report.rep = rep
            reports.append(report)
            if on_report:
                on_report(report)
    return reports


def _describe(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def _loose_config(base: RoundConfig, cell: dict, seed: int):
    """Unvalidated stand-in so a rejected cell can still be reported."""
    cfg = object.__new__(RoundConfig)
    for f in dataclasses.fields(RoundConfig):
        object.__setattr__(cfg, f.name, cell.get(f.name, getattr(base, f.name)))
    object.__setattr__(cfg, "seed", seed)
    return cfg


_CONFIG_KEYS = {
    "n": int, "m": int, "lambda": int, "delta": int, "eta": float, "backend": str,
    "extension": str, "thaw_side": str, "seed": int, "reps": int, "profile": str, "threshold": int,
}


def parse_config(text: str) -> tuple[RoundConfig, int]:
    """Flat ``key = value`` text; returns the config and the repetition count."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](val)
        except ValueError:
            raise ConfigurationError(f"line {lineno}: bad value for {key!r}") from None
    reps = values.pop("reps", 5)
    if "lambda" in values:
        values["lam"] = values.pop("lambda")
    return RoundConfig(**values), reps


def load_config(path) -> tuple[RoundConfig, int]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
