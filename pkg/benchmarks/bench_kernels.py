"""Compare the compiled and numpy kernel backends on the V_qs hot loops.

    python benchmarks/bench_kernels.py [--t 2039] [--shifts 64] [--primes 168] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from gamma1_lab.arith import primes_below, roots_of_unity
from gamma1_lab.kernels import backends


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=int, default=2039, help="modulus")
    ap.add_argument("--shifts", type=int, default=64, help="number of shifts qs mod t")
    ap.add_argument("--primes", type=int, default=168, help="number of m values")
    ap.add_argument("--q", type=int, default=101)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    t = args.t
    roots = roots_of_unity(t)
    ms = np.array(primes_below(10**6)[: args.primes], dtype=np.int64)
    shifts = (args.q * np.arange(1, args.shifts + 1, dtype=np.int64)) % t
    impls = backends()
    ref = None
    print(f"t={t} shifts={args.shifts} m-values={ms.size}")
    print(f"{'backend':<8} {'inverse_table':>14} {'vsum_batch':>12} {'coefficients':>13}")
    for name, mod in impls.items():
        inv = mod.inverse_table(t)
        t_inv = _best(lambda: mod.inverse_table(t), args.repeat)
        t_v = _best(lambda: mod.vsum_batch(t, shifts, ms, 1, inv, roots, True), args.repeat)
        t_c = _best(lambda: [mod.admissible_coefficients(t, int(a), inv, roots) for a in shifts], args.repeat)
        out, _ = mod.vsum_batch(t, shifts, ms, 1, inv, roots, True)
        if ref is None:
            ref = out
        err = float(np.abs(out - ref).max())
        print(f"{name:<8} {t_inv:>13.4f}s {t_v:>11.4f}s {t_c:>12.4f}s   max|diff|={err:.1e}")
    if len(impls) == 1:
        print("compiled backend not built; only the numpy fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
