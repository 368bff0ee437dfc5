"""Command-line front end: verify | density | scan | diagnose-blocks | mellin-probe.

Exit codes: 0 success, 1 invariant failure, 2 non-certified numerics, 64 usage error.
Settings resolve as command-line flag > JSON config file (--config) > built-in default.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .arith import primes_below
from .errors import Gamma1LabError
from .family import FamilyParams, TruncationPolicy, default_threads

EXIT_OK, EXIT_FAIL, EXIT_UNCERTIFIED, EXIT_USAGE = 0, 1, 2, 64

SCAN_COLUMNS = (
    "q", "k", "delta", "testfn", "d_total", "main_term", "p_term", "p2_term",
    "s1", "s2", "m_off", "eps_off", "tail_bound_total", "certified",
)
BLOCK_COLUMNS = ("P", "S", "T", "case", "block_value", "bound_ratio")
MELLIN_COLUMNS = ("v", "abs_M1", "regime", "bound_ratio")

DEFAULTS = {
    "q": 101,
    "q_min": None,
    "q_max": None,
    "primes_only": False,
    "k": 3,
    "delta": 1.0,
    "testfn": "fejer",
    "tail_eps": 1e-5,
    "st_cap": 4096,
    "deterministic": False,
    "threads": None,
    "format": "json",
    "out": None,
    "filter": None,
    # diagnose-blocks
    "P": [8.0, 16.0, 32.0, 64.0],
    "S": [1.0, 2.0],
    "T": [1.0, 2.0, 4.0],
    # mellin-probe
    "X": 100.0,
    "j": 1.0,
    "alpha": 0.0,
    "sign": 1,
    "v_min": None,
    "v_max": None,
    "points": 200,
}


_RUN_KEYS = ("q", "k", "delta", "testfn", "tail_eps", "st_cap", "deterministic", "threads", "format", "out")
COMMAND_KEYS = {
    "verify": ("filter", "out"),
    "density": _RUN_KEYS,
    "scan": _RUN_KEYS + ("q_min", "q_max", "primes_only"),
    "diagnose-blocks": _RUN_KEYS + ("P", "S", "T"),
    "mellin-probe": ("X", "j", "alpha", "sign", "v_min", "v_max", "points", "out"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    q: int
    q_min: int | None
    q_max: int | None
    primes_only: bool
    k: int
    delta: float
    testfn: str
    tail_eps: float
    st_cap: int
    deterministic: bool
    threads: int
    format: str
    out: str | None

    def validate(self) -> None:
        if self.k < 3 or self.k % 2 == 0:
            raise UsageError(f"k must be odd and >= 3, got {self.k}")
        if self.q < 3:
            raise UsageError(f"q must be >= 3, got {self.q}")
        if not (0.0 < self.tail_eps < 1.0):
            raise UsageError(f"tail_eps must lie in (0, 1), got {self.tail_eps}")
        if not (self.delta > 0) or not math.isfinite(self.delta):
            raise UsageError(f"delta must be positive, got {self.delta}")
        if self.testfn not in ("fejer", "bump"):
            raise UsageError(f"testfn must be fejer or bump, got {self.testfn}")
        if self.format not in ("json", "csv"):
            raise UsageError(f"format must be json or csv, got {self.format}")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")

    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(
            tail_eps=self.tail_eps, st_cap=self.st_cap, deterministic=self.deterministic, threads=self.threads
        )


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of defaults (flags override it)")
    common.add_argument("--q", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--delta", type=float)
    common.add_argument("--testfn", choices=("fejer", "bump"))
    common.add_argument("--tail-eps", dest="tail_eps", type=float)
    common.add_argument("--st-cap", dest="st_cap", type=int)
    common.add_argument("--deterministic", action="store_const", const=True,
                        help="serial fixed-order summation and no wall time in reports")
    common.add_argument("--threads", type=int, help="worker threads (default $GAMMA1_LAB_THREADS or 1)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"))

    p = _Parser(prog="gamma1-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    v.add_argument("--filter", help="comma-separated suites to run")
    v.add_argument("--inject-fault", dest="inject_fault", choices=("bessel-x-switch",), help=argparse.SUPPRESS)

    sub.add_parser("density", parents=[common], help="one-level density report for a single q")

    s = sub.add_parser("scan", parents=[common], help="density reports over a range of q (CSV)")
    s.add_argument("--q-min", dest="q_min", type=int)
    s.add_argument("--q-max", dest="q_max", type=int)
    s.add_argument("--primes-only", dest="primes_only", action="store_const", const=True)

    b = sub.add_parser("diagnose-blocks", parents=[common], help="dyadic block sums D(P,S,T) (CSV)")
    b.add_argument("--P", nargs="*", type=float)
    b.add_argument("--S", nargs="*", type=float)
    b.add_argument("--T", nargs="*", type=float)

    m = sub.add_parser("mellin-probe", parents=[common], help="|M1| regime scan over a v grid (CSV)")
    m.add_argument("--X", type=float)
    m.add_argument("--j", type=float)
    m.add_argument("--alpha", type=float)
    m.add_argument("--sign", type=int, choices=(1, -1))
    m.add_argument("--v-min", dest="v_min", type=float)
    m.add_argument("--v-max", dest="v_max", type=float)
    m.add_argument("--points", type=int)
    return p


def _resolve(args: argparse.Namespace) -> dict:
    merged = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(data)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if merged["threads"] is None:
        merged["threads"] = default_threads()
    return merged


def _config(merged: dict) -> RunConfig:
    try:
        cfg = RunConfig(**{f: merged[f] for f in RunConfig.__dataclass_fields__})
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    cfg.validate()
    return cfg


# ---------------------------------------------------------------- output helpers


def fmt(x) -> str:
    """CSV cell: 17 significant digits for floats, lowercase booleans."""
    if isinstance(x, bool) or isinstance(x, np.bool_):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(columns, rows, out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    _emit(buf.getvalue(), out)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_id() -> str:
    """Content hash of the package sources."""
    h = hashlib.sha1()
    root = Path(__file__).parent
    for path in sorted(list(root.glob("*.py")) + list(root.glob("*.pyx"))):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:12]


def provenance(merged: dict, wall: float | None, deterministic: bool, command: str = "density") -> dict:
    return {
        "config": {k: merged[k] for k in sorted(COMMAND_KEYS[command])},
        "build_id": build_id(),
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "wall_time_s": None if deterministic else wall,
    }


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


# ---------------------------------------------------------------- commands


def cmd_verify(args, merged) -> int:
    from .checks import SUITES, suite

    chosen = SUITES
    if args.filter:
        chosen = tuple(s.strip() for s in args.filter.split(",") if s.strip())
        bad = [s for s in chosen if s not in SUITES]
        if bad:
            raise UsageError(f"unknown suite(s) {bad}; choose from {', '.join(SUITES)}")
    failed = 0
    lines = []
    for name in chosen:
        for res in suite(name, fault=args.inject_fault):
            lines.append(res.line())
            failed += not res.passed
    lines.append(f"{'OK' if not failed else 'FAILED'}: {failed} failure(s)")
    _emit("\n".join(lines) + "\n", merged["out"])
    return EXIT_FAIL if failed else EXIT_OK


def _density(cfg: RunConfig):
    from .density import one_level_density
    from .testfn import make_pair

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return one_level_density(FamilyParams(cfg.q, cfg.k), make_pair(cfg.testfn, cfg.delta), cfg.policy())


def cmd_density(args, merged) -> int:
    cfg = _config(merged)
    t0 = time.perf_counter()
    rep = _density(cfg)
    wall = time.perf_counter() - t0
    if cfg.format == "csv":
        row = rep.to_dict()
        write_csv(SCAN_COLUMNS, [row], cfg.out)
    else:
        doc = {"report": rep.to_dict(), "provenance": provenance(merged, wall, cfg.deterministic)}
        _emit(json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n", cfg.out)
    return EXIT_OK if rep.certified else EXIT_UNCERTIFIED


def scan_qs(q_min: int, q_max: int, primes_only: bool) -> list[int]:
    lo = max(3, q_min)
    if q_max < lo:
        return []
    if primes_only:
        return [p for p in primes_below(q_max + 1) if p >= lo]
    return list(range(lo, q_max + 1))


def cmd_scan(args, merged) -> int:
    if merged["q_min"] is None or merged["q_max"] is None:
        raise UsageError("scan needs --q-min and --q-max")
    cfg = _config(merged)
    rows = []
    all_ok = True
    for q in scan_qs(int(merged["q_min"]), int(merged["q_max"]), bool(merged["primes_only"])):
        one = RunConfig(**{**asdict(cfg), "q": q})
        try:
            row = _density(one).to_dict()
        except Gamma1LabError as exc:
            print(f"q={q}: {exc}", file=sys.stderr)
            row = {c: math.nan for c in SCAN_COLUMNS}
            row.update(q=q, k=cfg.k, delta=cfg.delta, testfn=cfg.testfn, certified=False)
        all_ok = all_ok and bool(row["certified"])
        rows.append(row)
    write_csv(SCAN_COLUMNS, rows, cfg.out)
    return EXIT_OK if all_ok else EXIT_UNCERTIFIED


def cmd_diagnose_blocks(args, merged) -> int:
    from .analysis import block_bound, block_D, block_grid
    from .testfn import make_pair

    cfg = _config(merged)
    pair = make_pair(cfg.testfn, cfg.delta)
    params = FamilyParams(cfg.q, cfg.k)
    specs, rejected = block_grid(cfg.q, pair, merged["P"], merged["S"], merged["T"])
    for P, S, T, reason in rejected:
        print(f"rejected P={fmt(float(P))} S={fmt(float(S))} T={fmt(float(T))}: {reason}", file=sys.stderr)
    rows = []
    for spec in specs:
        val = abs(block_D(params, pair, spec, cfg.policy()))
        rows.append({
            "P": float(spec.P), "S": float(spec.S), "T": float(spec.T), "case": spec.case_label,
            "block_value": val, "bound_ratio": val / block_bound(spec, cfg.k),
        })
    write_csv(BLOCK_COLUMNS, rows, cfg.out)
    return EXIT_OK


def cmd_mellin_probe(args, merged) -> int:
    from .special import MellinProbe, mellin_regime_scan

    try:
        probe = MellinProbe(X=float(merged["X"]), j=float(merged["j"]), alpha=float(merged["alpha"]),
                            sign=int(merged["sign"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    r = probe.ratio
    v_min = -20.0 * r if merged["v_min"] is None else float(merged["v_min"])
    v_max = 20.0 * r if merged["v_max"] is None else float(merged["v_max"])
    n = int(merged["points"])
    if n < 0:
        raise UsageError("points must be >= 0")
    grid = np.linspace(v_min, v_max, n) if n else []
    rows = [asdict(row) for row in mellin_regime_scan(probe, grid)]
    write_csv(MELLIN_COLUMNS, rows, merged["out"])
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "density": cmd_density,
    "scan": cmd_scan,
    "diagnose-blocks": cmd_diagnose_blocks,
    "mellin-probe": cmd_mellin_probe,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        merged = _resolve(args)
        return COMMANDS[args.command](args, merged)
    except UsageError as exc:
        print(f"gamma1-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Gamma1LabError as exc:
        print(f"gamma1-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
