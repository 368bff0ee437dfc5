"""Exit criteria: one pass/fail line per criterion, at the stated tolerances."""
from __future__ import annotations

import csv
import math
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
import pytest

from gamma1_lab import checks
from gamma1_lab.analysis import (
    delta_decay_regression,
    envelope_fit,
    kernel_value,
    loglog_regression,
    nonvanishing_bound,
    worst_case_slope,
)
from gamma1_lab.cli import main as cli_main
from gamma1_lab.density import (
    LatticePlan,
    eps_higher_power_diag,
    eps_off_lifted,
    eps_off_tail,
    one_level_density,
)
from gamma1_lab.family import FamilyParams, TruncationPolicy, kappa, v_sum_m_average
from gamma1_lab.special import BesselEvaluator, MellinProbe, fitted_band_constants, mellin_regime_scan
from gamma1_lab.testfn import fejer_pair

pytestmark = pytest.mark.acceptance

Q_GRID = (101, 211, 401, 809)
DATA = Path(__file__).parent / "data"


def test_c01_orthogonality(criterion):
    t0 = time.perf_counter()
    err = checks.orthogonality_error(3, 50)
    dt = time.perf_counter() - t0
    ok = criterion(1, "odd-character orthogonality, q in [3,50]", err <= 1e-10 and dt < 5,
                   f"max diff {err:.2e} (<= 1e-10), {dt:.2f}s (< 5s)")
    assert ok


def test_c02_ramanujan_reduction(criterion):
    t0 = time.perf_counter()
    brute = checks.ramanujan_error((5, 7, 11), 4, 60)
    kernel = checks.v_sum_agreement((5, 7, 11), 4, 60)
    lhs, rhs = v_sum_m_average(5, 1, 3)
    e13 = complex(mpmath.expjpi(mpmath.mpf(2) / 3))
    target = complex(0.5, math.sqrt(3.0) / 2.0)  # e(1/3) + 1 = -e(-1/3)
    worked = max(abs(lhs - (e13 + 1)), abs(rhs + e13.conjugate()), abs(lhs - target))
    dt = time.perf_counter() - t0
    ok = criterion(2, "Ramanujan reduction vs brute force", max(brute, kernel, worked) <= 1e-9 and dt < 10,
                   f"brute {brute:.2e}, kernel {kernel:.2e}, t=3 worked case {worked:.2e} (<= 1e-9), {dt:.2f}s")
    assert ok


def test_c03_partition_of_unity(criterion):
    t0 = time.perf_counter()
    res = checks.partition_residual(1000, 1e8)
    dt = time.perf_counter() - t0
    ok = criterion(3, "dyadic partition of unity on [1, 1e8]", res <= 1e-10 and dt < 1,
                   f"residual {res:.2e} (<= 1e-10), {dt:.3f}s (< 1s)")
    assert ok


def test_c04_bessel(criterion):
    t0 = time.perf_counter()
    overlap = checks.bessel_overlap_error((2, 4, 6))
    margin = checks.bessel_margin((2, 4, 6))
    with mpmath.workdps(50):
        ref = float(mpmath.besselj(2, 1))
    j21 = abs(BesselEvaluator(2)(1.0) - ref)
    dt = time.perf_counter() - t0
    ok = criterion(4, "Bessel branches, envelope and oracle",
                   overlap <= 1e-9 and margin <= 1.3 and j21 <= 1e-12 and dt < 5,
                   f"overlap {overlap:.2e} (<= 1e-9), bound ratio {margin:.3f} (<= 1.3), "
                   f"|J_2(1) - oracle| {j21:.1e} (<= 1e-12), {dt:.2f}s")
    assert ok


@pytest.mark.slow
def test_c05_delta_decay(criterion):
    t0 = time.perf_counter()
    policy = TruncationPolicy(tail_eps=1e-12, st_cap=4096)
    run = delta_decay_regression([FamilyParams(q, 3) for q in Q_GRID], range(1, 7), range(1, 7), policy)
    # weight 5 certifies the same tolerance outright
    run5 = delta_decay_regression([FamilyParams(q, 5) for q in Q_GRID], range(1, 7), range(1, 7), policy)
    dt = time.perf_counter() - t0
    reg = run.regression
    ok = reg.slope <= -1.8 and reg.r_squared >= 0.9 and run.worst_slope <= -1.8 and dt < 600
    criterion(5, "max |Delta - delta| decay, m,n <= 6, k=3", ok,
              f"slope {reg.slope:.3f} (<= -1.8), r2 {reg.r_squared:.4f} (>= 0.9), worst-case slope over "
              f"tail intervals {run.worst_slope:.3f}, tails certified at 1e-12: {run.certified}; "
              f"k=5 slope {run5.regression.slope:.3f} certified: {run5.certified}; {dt:.0f}s")
    assert ok
    assert run5.certified and run5.regression.slope <= -1.8


def test_c06_reassembly(criterion):
    t0 = time.perf_counter()
    rep = one_level_density(FamilyParams(101, 3), fejer_pair(1.0), TruncationPolicy(tail_eps=1e-6))
    dt = time.perf_counter() - t0
    tails = rep.tail_bound_total
    r1, r2 = rep.reassembly_residual, rep.split_residual
    ok = r1 <= 1e-8 + tails and r2 <= tails and dt < 300
    criterion(6, "S1 + S2 = M_off and M_off + eps_off = S_N at q=101", ok,
              f"|S1+S2-M_off| {r1:.1e}, |M_off+eps_off-S_N| {r2:.1e}, tails {tails:.1e}, U={rep.cutoff}, {dt:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def lifted_errors():
    f = fejer_pair(1.0)
    policy = TruncationPolicy(tail_eps=1e-12, st_cap=4096)
    out = {"eps_off": [], "eps_off_tail": [], "eps_hp": [], "eps_hp_tail": []}
    t0 = time.perf_counter()
    for q in Q_GRID:
        params = FamilyParams(q, 3)
        plan = LatticePlan(policy.st_cap, 0.0, 0.0, False)
        out["eps_off"].append(kappa(3, eps_off_lifted(params, f, plan)))
        out["eps_off_tail"].append(eps_off_tail(params, f, plan.cutoff))
        hp = eps_higher_power_diag(params, f, policy)
        out["eps_hp"].append(hp.value)
        out["eps_hp_tail"].append(hp.tail_bound)
    out["seconds"] = time.perf_counter() - t0
    return out


@pytest.mark.slow
def test_c07_eps_off_decay(criterion, lifted_errors):
    reg = loglog_regression(Q_GRID, lifted_errors["eps_off"])
    worst = worst_case_slope(Q_GRID, lifted_errors["eps_off"], lifted_errors["eps_off_tail"])
    ok = reg.slope <= -2.5
    criterion(7, "eps_off decay, k=3", ok,
              f"slope {reg.slope:.3f} (<= -2.5), r2 {reg.r_squared:.3f}, worst-case slope {worst:.3f}")
    assert ok


@pytest.mark.slow
def test_c08_eps_higher_power_decay(criterion, lifted_errors):
    reg = loglog_regression(Q_GRID, lifted_errors["eps_hp"])
    worst = worst_case_slope(Q_GRID, lifted_errors["eps_hp"], lifted_errors["eps_hp_tail"])
    ok = reg.slope <= -0.8
    criterion(8, "eps_higher_power decay", ok,
              f"slope {reg.slope:.3f} (<= -0.8), r2 {reg.r_squared:.3f}, worst-case slope {worst:.3f}")
    assert ok


SCAN_ARGS = ["scan", "--q-min", "101", "--q-max", "1009", "--primes-only", "--k", "3", "--delta", "1",
             "--testfn", "fejer", "--tail-eps", "1e-5", "--deterministic"]


@pytest.fixture(scope="module")
def density_scan(tmp_path_factory):
    out = tmp_path_factory.mktemp("scan") / "scan1.csv"
    t0 = time.perf_counter()
    code = cli_main(SCAN_ARGS + ["--out", str(out)])
    return out, code, time.perf_counter() - t0


def _read_scan(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.slow
def test_c09_density_trend(criterion, density_scan):
    path, code, dt = density_scan
    rows = _read_scan(path)
    qs = [int(r["q"]) for r in rows]
    dev = [abs(float(r["d_total"]) - 1.0) for r in rows]
    env = envelope_fit(qs, dev)
    n4 = len(dev) // 4
    top, bottom = max(dev[-n4:]), max(dev[:n4])
    snap = _read_scan(DATA / "density_scan_snapshot.csv")
    drift = max(abs(float(a["d_total"]) - float(b["d_total"])) for a, b in zip(rows, snap))
    same_q = [r["q"] for r in rows] == [r["q"] for r in snap]
    certified = all(r["certified"] == "true" for r in rows)
    ok = (code == 0 and certified and len(rows) == 144 and env.slope > 0 and env.r_squared >= 0.5
          and top < bottom and same_q and drift <= 1e-12 and dt < 3600)
    criterion(9, "density trend over primes in [101, 1009]", ok,
              f"{len(rows)} rows, all certified: {certified}; |d-1| = C/log q + c0 fit C={env.slope:.3e}, "
              f"r2 {env.r_squared:.3f} (>= 0.5); top-quartile max {top:.2e} < bottom-quartile max {bottom:.2e}; "
              f"snapshot drift {drift:.1e}; {dt:.0f}s")
    assert ok


def test_c10_mellin_regimes(criterion):
    t0 = time.perf_counter()
    saddle, decay = {}, []
    for X in (100.0, 1000.0):
        for alpha in (0.0, 2.0):
            probe = MellinProbe(X=X, j=1.0, alpha=alpha, sign=1)
            d1, c1 = fitted_band_constants(probe)
            r = probe.ratio
            grid = np.concatenate([-np.linspace(d1 * r, c1 * r, 41), np.linspace(0.5 * r, 20 * r, 20)])
            rows = mellin_regime_scan(probe, grid)
            saddle.setdefault(X, []).extend(row.bound_ratio for row in rows if row.regime == "saddle")
            decay.extend(row.bound_ratio for row in rows if row.regime == "decay")
    dt = time.perf_counter() - t0
    c_lo, c_hi = max(saddle[100.0]), max(saddle[1000.0])
    fitted = max(c_lo, c_hi)
    within = max(c_lo, c_hi) / min(c_lo, c_hi) <= 3.0
    c_decay = max(decay)
    ok = within and c_decay <= 1.0 and dt < 120
    criterion(10, "Mellin saddle band and decay regime", ok,
              f"saddle constants {c_lo:.3f} (X/j=1e2), {c_hi:.3f} (X/j=1e3), fitted {fitted:.3f}, "
              f"ratio {max(c_lo, c_hi) / min(c_lo, c_hi):.3f} (<= 3); decay constant {c_decay:.2e} (<= 1); {dt:.0f}s")
    assert ok


def test_c11_corollary_arithmetic(criterion):
    t0 = time.perf_counter()
    nv = nonvanishing_bound(Fraction(8, 3))
    kv = kernel_value(8.0 / 3.0, 0.0)
    dt = time.perf_counter() - t0
    ok = nv == Fraction(5, 8) and kv == 8.0 / 3.0 and dt < 1e-3
    criterion(11, "non-vanishing bound and kernel value", ok,
              f"nonvanishing_bound(8/3) = {nv}, kernel_value(8/3, 0) = {kv!r}, {dt * 1e6:.0f}us")
    assert ok


@pytest.mark.slow
def test_c12_scan_determinism(criterion, density_scan, tmp_path):
    first, _, _ = density_scan
    second = tmp_path / "scan2.csv"
    cli_main(SCAN_ARGS + ["--out", str(second)])
    same = first.read_bytes() == second.read_bytes()
    criterion(12, "deterministic scan rerun is byte-identical", same,
              f"{first.stat().st_size} bytes, identical: {same}")
    assert same
