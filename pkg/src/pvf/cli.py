"""Command-line front end: ``pvf bench``, ``pvf verify``, ``pvf gen-matrices``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import gc
import statistics
import sys
import warnings
from collections import defaultdict
from pathlib import Path

from . import field as F
from . import linalg
from .errors import CommitmentMismatch, ConfigurationError, ParameterError, ResultForgery, VerificationError
from .orchestrator import (
    EXTENSIONS,
    TAMPERS,
    RoundConfig,
    RoundReport,
    load_config,
    rep_seed,
    run_adversarial_round,
    run_campaign,
    run_round,
)
from .rng import generator

KB = 1024

CONFIG_COLUMNS = ["n", "m", "lambda", "delta", "eta", "backend", "extension", "thaw_side", "seed", "profile", "threshold", "rep"]
CORE_COLUMNS = ["freeze_ms", "user_secagg_ms", "server_secagg_ms", "verify_ms", "thaw_ms", "user_bytes", "correctness", "error"]
EXTRA_COLUMNS = [
    "ysum_ms", "user_ms", "server_ms", "total_ms", "user_kb", "backend_entries",
    "improvement_factor_user", "improvement_factor_server", "improvement_factor_comm",
]
COLUMNS = CONFIG_COLUMNS + CORE_COLUMNS + EXTRA_COLUMNS

# fields that identify a cell apart from the compression parameters
_CELL_KEY = ("n", "m", "eta", "backend", "extension", "thaw_side", "profile")


# ---------------------------------------------------------------------------
# Rows and improvement factors
# ---------------------------------------------------------------------------


def report_row(rep: RoundReport) -> dict:
    cfg = rep.config
    t = rep.timings
    row = {
        "n": cfg.n, "m": cfg.m, "lambda": cfg.lam, "delta": cfg.delta, "eta": cfg.eta,
        "backend": cfg.backend, "extension": cfg.extension, "thaw_side": cfg.thaw_side,
        "seed": cfg.seed, "profile": cfg.profile,
        "threshold": cfg.descriptor.threshold if rep.error is None and cfg.backend == "mask" else (cfg.threshold or ""),
        "rep": rep.rep,
    }
    for key in ("freeze", "user_secagg", "server_secagg", "verify", "thaw", "ysum", "user", "server", "total"):
        row[f"{key}_ms"] = f"{t[key]:.3f}" if key in t else ""
    row["user_bytes"] = rep.user_bytes if rep.error is None else ""
    row["user_kb"] = f"{rep.user_bytes / KB:.3f}" if rep.error is None else ""
    row["backend_entries"] = rep.backend_entries if rep.error is None else ""
    row["correctness"] = rep.correctness
    row["error"] = rep.error or ""
    return row


def _median(values):
    return statistics.median(values) if values else float("nan")


def cell_stats(reports) -> dict:
    """Per-cell medians and means of the headline metrics over successful reps."""
    groups = defaultdict(list)
    for r in reports:
        if r.error is None:
            c = r.config
            groups[(tuple(getattr(c, k) for k in _CELL_KEY), c.lam, c.delta)].append(r)
    out = {}
    for key, reps in groups.items():
        stats = {"reps": len(reps)}
        for metric in ("user", "server", "server_secagg", "total"):
            vals = [r.timings[metric] for r in reps]
            stats[f"{metric}_median"] = _median(vals)
            stats[f"{metric}_mean"] = statistics.fmean(vals)
        stats["bytes_median"] = _median([r.user_bytes for r in reps])
        stats["entries"] = reps[0].backend_entries
        out[key] = stats
    return out


def improvement_factors(stats: dict) -> dict:
    """Ratios of medians against the lambda = 1 cell sharing every other field."""
    out = {}
    for (base_key, lam, delta), s in stats.items():
        ref = stats.get((base_key, 1, 0))
        if ref is None or lam == 1:
            continue
        out[(base_key, lam, delta)] = {
            "user": ref["user_median"] / s["user_median"] if s["user_median"] else float("inf"),
            "server": ref["server_median"] / s["server_median"] if s["server_median"] else float("inf"),
            "server_secagg": (
                ref["server_secagg_median"] / s["server_secagg_median"] if s["server_secagg_median"] else float("inf")
            ),
            "comm": ref["bytes_median"] / s["bytes_median"],
        }
    return out


def write_csv(path, rows) -> None:
    """Append rows; the header is written once and must match on reuse."""
    path = Path(path)
    exists = path.exists() and path.stat().st_size > 0
    if exists:
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
        if header != COLUMNS:
            raise ConfigurationError(f"{path} has a different header; refusing to append")
    with open(path, "a", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS)
        if not exists:
            w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in COLUMNS})


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _base_config(args, **extra) -> RoundConfig:
    return RoundConfig(
        n=args.n, m=args.m, lam=extra.pop("lam", 1), delta=extra.pop("delta", 0), eta=args.eta,
        backend=args.backend, extension=args.extension,
        thaw_side=None if args.thaw == "auto" else args.thaw,
        seed=args.seed, profile=args.profile, threshold=args.threshold, **extra,
    )


def _check_lambdas(args, parser) -> None:
    for lam in args.lambda_:
        if lam == 2 or lam < 1:
            parser.error(f"lambda must be 1 (baseline) or greater than 2, got {lam}")


def _cells_for(args) -> list[dict]:
    """(lam, delta) pairs; delta values that do not fit a lambda are dropped, lambda=1 takes delta=0."""
    cells = []
    for lam in args.lambda_:
        if lam == 1:
            cells.append({"lam": 1, "delta": 0})
            continue
        for d in args.delta:
            if 0 <= d < lam - 1:
                cells.append({"lam": lam, "delta": d})
    return cells


def cmd_bench(args, parser) -> int:
    _check_lambdas(args, parser)
    cells = _cells_for(args)
    if not cells:
        parser.error("no (lambda, delta) pair satisfies 0 <= delta < lambda - 1")
    try:
        base = _base_config(args, **cells[-1])
    except (ConfigurationError, ParameterError) as exc:
        parser.error(str(exc))
    if args.padding_worst_case:
        return _bench_padding(args, base)
    reports = []
    for cell in cells:
        grid = {"lam": [cell["lam"]], "delta": [cell["delta"]]}
        reports += run_campaign(base, grid, reps=args.reps, on_report=_progress)
    stats = cell_stats(reports)
    factors = improvement_factors(stats)
    rows = []
    for r in reports:
        row = report_row(r)
        c = r.config
        key = (tuple(getattr(c, k) for k in _CELL_KEY), c.lam, c.delta)
        if key in factors:
            f = factors[key]
            row["improvement_factor_user"] = f"{f['user']:.3f}"
            row["improvement_factor_server"] = f"{f['server']:.3f}"
            row["improvement_factor_comm"] = f"{f['comm']:.3f}"
        rows.append(row)
    if args.out:
        write_csv(args.out, rows)
    _print_summary(args, stats, factors)
    return 0


def _progress(r: RoundReport) -> None:
    status = "ok" if r.error is None and r.correctness else (r.error or "INCORRECT")
    total = r.timings.get("total", float("nan"))
    print(f"  lambda={r.config.lam} delta={r.config.delta} rep={r.rep} total={total:.1f}ms {status}", file=sys.stderr)


def _print_summary(args, stats, factors) -> None:
    print(f"desk scale: n={args.n}, m={args.m}, reps={args.reps} (KB = 1024 bytes)")
    for (key, lam, delta), s in sorted(stats.items(), key=lambda kv: (kv[0][1], kv[0][2])):
        print(
            f"lambda={lam:<4} delta={delta:<3} entries={s['entries']:<7} "
            f"user median={s['user_median']:.2f}ms mean={s['user_mean']:.2f}ms  "
            f"server median={s['server_median']:.2f}ms mean={s['server_mean']:.2f}ms  "
            f"bytes={s['bytes_median'] / KB:.1f}KB"
        )
    for (key, lam, delta), f in sorted(factors.items(), key=lambda kv: (kv[0][1], kv[0][2])):
        print(
            f"improvement lambda={lam} delta={delta}: user {f['user']:.1f}x  server {f['server']:.1f}x  "
            f"server secagg {f['server_secagg']:.1f}x  comm {f['comm']:.1f}x"
        )
    if not factors:
        print("no improvement factors: include lambda=1 in --lambda for a baseline cell")


def padding_pair(base: RoundConfig, lam: int, delta: int):
    """Worst-case padding (m - lam + 1 real entries, lam - 1 pad) and the unpadded m."""
    worst = dataclasses.replace(base, lam=lam, delta=delta, m=base.m - lam + 1)
    ref = dataclasses.replace(base, lam=lam, delta=delta)
    return worst, ref


def run_padding_comparison(base: RoundConfig, lam: int, delta: int, reps: int):
    """Interleaved reps of the two padding cells; returns both report lists."""
    worst, ref = padding_pair(base, lam, delta)
    out = {"worst": [], "ref": []}
    for rep in range(reps):
        seed = rep_seed(base.seed, rep)
        order = (("worst", worst), ("ref", ref)) if rep % 2 == 0 else (("ref", ref), ("worst", worst))
        for label, cfg in order:
            gc.collect()
            r = run_round(dataclasses.replace(cfg, seed=seed))
            r.rep = rep
            out[label].append(r)
    return out


def padding_overhead(res) -> tuple[float, int]:
    """(median of paired relative total-time differences, worst-case byte delta).

    A negative time value means the padded cell was the faster one.
    """
    rel = [
        (w.timings["total"] - r.timings["total"]) / r.timings["total"]
        for w, r in zip(res["worst"], res["ref"])
    ]
    dbytes = max(w.user_bytes - r.user_bytes for w, r in zip(res["worst"], res["ref"]))
    return statistics.median(rel), dbytes


def _bench_padding(args, base: RoundConfig) -> int:
    rows = []
    failed = False
    for cell in _cells_for(args):
        lam = cell["lam"]
        if lam == 1:
            continue
        res = run_padding_comparison(base, lam, cell["delta"], args.reps)
        rel, dbytes = padding_overhead(res)
        bound = lam * base.field.width
        ok = rel < 0.01 and dbytes < bound
        failed |= not ok
        print(
            f"lambda={lam} delta={cell['delta']}: m={base.m - lam + 1} pads {lam - 1} entries vs m={base.m}; "
            f"paired median time overhead {100 * rel:+.3f}%, byte delta {dbytes} (bound {bound}) "
            f"-> {'PASS' if ok else 'FAIL'}"
        )
        rows += [report_row(r) for r in res["worst"] + res["ref"]]
    if args.out:
        write_csv(args.out, rows)
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

_EXPECTED_ABORT = {"uce": CommitmentMismatch, "rve": ResultForgery}


def _tamper_config(tamper: str, extension: str, seed: int, gen) -> RoundConfig:
    lam = int(gen.integers(3, 9))
    backends = ["plain", "mask"] if extension == "uce" else ["plain", "mask", "he"]
    backend = backends[int(gen.integers(len(backends)))]
    return RoundConfig(
        n=int(gen.integers(2, 6)), m=int(gen.integers(1, 40)), lam=lam, delta=int(gen.integers(0, lam - 1)),
        eta=0.0, backend=backend, extension=extension, seed=seed, profile="test",
    )


def inject(tamper: str, extension: str, trials: int, seed: int = 0) -> tuple[int, int]:
    """Returns (detected, trials) for one tamper/extension pairing."""
    gen = generator(seed, "inject", tamper, extension)
    detected = 0
    for i in range(trials):
        cfg = _tamper_config(tamper, extension, seed * 100003 + i, gen)
        try:
            rep = run_adversarial_round(cfg, tamper=tamper)
        except VerificationError:
            detected += 1
        else:
            if rep.correctness:
                raise AssertionError("tampered round produced the honest aggregate")
    return detected, trials


def _verify_properties(trials: int, seed: int):
    gen = generator(seed, "verify")
    # oracle equivalence across backends, thaw sides and extensions
    ok = True
    for i in range(trials):
        lam = int(gen.integers(3, 12))
        backend = ["plain", "mask", "he"][int(gen.integers(3))]
        ext = "none"
        if backend != "he" and gen.integers(3) == 0:
            ext = "uce"
        elif gen.integers(3) == 0:
            ext = "rve"
        cfg = RoundConfig(
            n=int(gen.integers(1, 12)), m=int(gen.integers(1, 100)), lam=lam, delta=int(gen.integers(0, lam - 1)),
            eta=[0.0, 0.1, 0.3][int(gen.integers(3))], backend=backend, extension=ext, seed=i, profile="test",
        )
        r = run_round(cfg)
        ok &= r.correctness and r.backend_entries == cfg.backend_entries
    yield "oracle equivalence", ok

    for tamper, ext in (("user-inconsistent-freeze", "uce"), ("user-wrong-alpha", "uce"), ("server-forge-sum-y", "rve")):
        d, n = inject(tamper, ext, trials, seed)
        yield f"tamper detection {tamper} + {ext}", d == n

    d, n = inject("server-forge-sum-y", "none", max(1, trials // 4), seed)
    yield "forgery without extension goes unnoticed but breaks correctness", d == 0

    ex = linalg.FieldMatrix.from_rows([[1, 2, 3], [1, 3, 3]], 5)
    yield "example check matrix rejected", not linalg.privacy_check(ex)
    good = True
    for s in range(trials):
        lam = int(gen.integers(3, 10))
        delta = int(gen.integers(0, lam - 1))
        ms = linalg.generate_freeze_matrices(F.DEFAULT_FIELD, lam, delta, seed=s)
        good &= linalg.privacy_check(ms.a_check) and linalg.rank(ms.a_check) == lam - delta - 1
    yield "generated matrices pass privacy check with full rank", good


def cmd_verify(args, parser) -> int:
    if args.inject:
        try:
            d, n = inject(args.inject, args.extension, args.trials, args.seed)
        except ConfigurationError as exc:
            parser.error(str(exc))
        if d == n:
            print(f"{args.inject} with extension {args.extension}: detected ({d}/{n})")
            return 0
        if d == 0 and args.extension == "none":
            print(f"{args.inject} with extension {args.extension}: undetected (expected), aggregate corrupted in {n}/{n}")
            return 0
        print(f"{args.inject} with extension {args.extension}: undetected in {n - d}/{n} trials")
        return 1
    failures = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, ok in _verify_properties(args.trials, args.seed):
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
            failures += not ok
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# gen-matrices
# ---------------------------------------------------------------------------


def cmd_gen_matrices(args, parser) -> int:
    if args.lambda_ <= 2:
        parser.error(f"lambda must exceed 2 (got {args.lambda_})")
    try:
        cfg = F.FieldConfig(p=args.p) if args.p != F.MERSENNE_61 else F.DEFAULT_FIELD
    except ParameterError:
        # small custom primes cannot carry the default input bounds
        cfg = F.FieldConfig(p=args.p, max_entry=1, n_max=1)
    try:
        ms = linalg.generate_freeze_matrices(cfg, args.lambda_, args.delta, seed=args.seed)
    except ParameterError as exc:
        parser.error(str(exc))
    blob = linalg.dumps(ms)
    out = Path(args.out or f"freeze_p{cfg.p}_l{args.lambda_}_d{args.delta}_s{args.seed}.pvfm")
    out.write_bytes(blob)
    again = linalg.loads(out.read_bytes())
    round_trip = again.a == ms.a and linalg.dumps(again) == blob
    verdict = linalg.privacy_check(ms.a_check)
    print(f"wrote {out} ({len(blob)} bytes)")
    print(f"privacy check: {'pass' if verdict else 'FAIL'}; rank of check matrix {linalg.rank(ms.a_check)}"
          f" of {ms.check_rows}; reload {'bit-exact' if round_trip else 'MISMATCH'}")
    return 0 if verdict and round_trip else 1


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pvf", description="Partial vector freezing benchmarks and checks")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a parameter sweep and write CSV")
    b.add_argument("--backend", choices=["plain", "mask", "he"], default="mask")
    b.add_argument("--extension", choices=list(EXTENSIONS), default="none")
    b.add_argument("--thaw", choices=["auto", "server", "user"], default="auto")
    b.add_argument("--n", type=int, default=10)
    b.add_argument("--m", type=int, default=100_000)
    b.add_argument("--lambda", dest="lambda_", type=_int_list, default=[1, 100])
    b.add_argument("--delta", type=_int_list, default=[0])
    b.add_argument("--eta", type=float, default=0.1)
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--threshold", type=int, default=None)
    b.add_argument("--out", default=None)
    b.add_argument("--profile", choices=["test", "standard"], default="standard")
    b.add_argument("--padding-worst-case", action="store_true",
                   help="compare m - lambda + 1 inputs (lambda - 1 pad entries) with m inputs")
    b.add_argument("--config", default=None, help="key=value file; flags given explicitly still apply")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run the property and tamper suite at test parameters")
    v.add_argument("--inject", choices=list(TAMPERS), default=None)
    v.add_argument("--extension", choices=list(EXTENSIONS), default="none")
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gen-matrices", help="generate and serialise freeze matrices")
    g.add_argument("--lambda", dest="lambda_", type=int, required=True)
    g.add_argument("--delta", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--p", type=int, default=F.MERSENNE_61)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen_matrices)
    return ap


def _apply_config_file(args, parser) -> None:
    try:
        cfg, reps = load_config(args.config)
    except (OSError, ConfigurationError, ParameterError) as exc:
        parser.error(f"config file: {exc}")
    defaults = {a.dest: a.default for a in parser._subparsers._group_actions[0].choices["bench"]._actions}
    given = {k for k, v in vars(args).items() if k in defaults and v != defaults[k]}
    mapping = {
        "n": cfg.n, "m": cfg.m, "lambda_": [cfg.lam], "delta": [cfg.delta], "eta": cfg.eta,
        "backend": cfg.backend, "extension": cfg.extension, "thaw": cfg.thaw_side, "seed": cfg.seed,
        "reps": reps, "profile": cfg.profile, "threshold": cfg.threshold,
    }
    for k, v in mapping.items():
        if k not in given:
            setattr(args, k, v)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    if args.command == "bench":
        if args.config:
            _apply_config_file(args, parser)
        if args.reps < 1 or args.n < 1 or args.m < 1:
            sub.error("--reps, --n and --m must be positive")
    return args.func(args, sub)


if __name__ == "__main__":
    sys.exit(main())
