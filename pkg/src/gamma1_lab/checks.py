"""Invariant suites shared by ``gamma1-lab verify`` and the test-suite.

Each check returns a CheckResult carrying the observed quantity and the bound
it is held to, so failures can be reported as "observed vs bound".
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .arith import character_group, euler_phi, odd_character_closed_form
from .special import BesselEvaluator, bessel_bound_margin, dyadic_partition_residual


@dataclass(frozen=True)
class CheckResult:
    module: str
    invariant: str
    observed: float
    bound: float

    @property
    def passed(self) -> bool:
        return bool(self.observed <= self.bound)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.module}:{self.invariant} observed={self.observed:.3e} bound={self.bound:.3e}"


# ---------------------------------------------------------------- arith


def orthogonality_error(q_lo: int = 3, q_hi: int = 50) -> float:
    """max |table average - closed form| over q in [q_lo, q_hi] and all m, n mod q."""
    worst = 0.0
    for q in range(q_lo, q_hi + 1):
        grp = character_group(q)
        rows = grp.value_table[grp.odd_indices()]
        avg = 2.0 * (rows.T @ np.conj(rows)) / euler_phi(q)
        closed = np.array([[odd_character_closed_form(q, m, n) for n in range(q)] for m in range(q)])
        worst = max(worst, float(np.abs(avg - closed).max()))
    return worst


def full_orthogonality_error(t_hi: int = 60) -> float:
    """max |(1/phi) sum_chi chi(a) conj(chi(b)) - [a = b]| over units, t <= t_hi."""
    worst = 0.0
    for t in range(1, t_hi + 1):
        grp = character_group(t)
        units = grp.structure.units
        tab = grp.value_table[:, units]
        gram = tab.T @ np.conj(tab) / euler_phi(t)
        worst = max(worst, float(np.abs(gram - np.eye(len(units))).max()))
    return worst


# ---------------------------------------------------------------- family


def brute_v_sum(q: int, s: int, m: int, n: int, t: int) -> complex:
    """V_qs(m, n; t) straight from the definition with cmath phases."""
    if t == 1:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for x in range(t):
        if math.gcd(x * (x + q * s), t) != 1:
            continue
        z = n * x + q * s
        total += cmath.exp(2j * math.pi * ((m * pow(x, -1, t) - pow(z, -1, t)) % t) / t)
    return total


def ramanujan_error(qs=(5, 7, 11), s_max: int = 4, t_max: int = 60) -> float:
    """max over (q, s, t) of |sum over units m of V(m,1;t) - mu(t) V(0,1;t)|, both sides brute force."""
    from .arith import mobius

    worst = 0.0
    for q in qs:
        for s in range(1, s_max + 1):
            for t in range(1, t_max + 1):
                units = [m for m in range(t) if math.gcd(m, t) == 1] if t > 1 else [0]
                lhs = sum(brute_v_sum(q, s, m, 1, t) for m in units)
                rhs = mobius(t) * brute_v_sum(q, s, 0, 1, t)
                worst = max(worst, abs(lhs - rhs))
    return worst


def v_sum_agreement(qs=(5, 7, 11), s_max: int = 4, t_max: int = 60) -> float:
    """max |kernel V - brute V| and |kernel-side Ramanujan residual| on the same grid."""
    from .family import v_sum, v_sum_m_average

    worst = 0.0
    for q in qs:
        for s in range(1, s_max + 1):
            for t in range(1, t_max + 1):
                lhs, rhs = v_sum_m_average(q, s, t)
                worst = max(worst, abs(lhs - rhs))
                for m in (0, 1, 2, t - 1):
                    if m >= 0:
                        worst = max(worst, abs(v_sum(q, s, m, 1, t) - brute_v_sum(q, s, m, 1, t)))
    return worst


# ---------------------------------------------------------------- special


def partition_residual(points: int = 1000, x_max: float = 1e8) -> float:
    xs = np.geomspace(1.0, x_max, points)
    return max(dyadic_partition_residual(float(x)) for x in xs)


def bessel_overlap_error(orders=(2, 4, 6), x_switch: float | None = None) -> float:
    """max over orders of |series - asymptotic| / sqrt(2/(pi x)) on [x_switch, x_switch + 8]."""
    worst = 0.0
    for nu in orders:
        ev = BesselEvaluator(nu, x_switch=x_switch) if x_switch is not None else BesselEvaluator(nu)
        xs = np.linspace(ev.x_switch, ev.x_switch + 8.0, 33)
        diff = np.abs(np.asarray(ev.series(xs)) - np.asarray(ev.asymptotic(xs)))
        worst = max(worst, float(np.max(diff / np.sqrt(2.0 / (np.pi * xs)))))
    return worst


def bessel_margin(orders=(2, 4, 6), x_switch: float | None = None) -> float:
    xs = np.geomspace(1e-3, 1e4, 400)
    worst = 0.0
    for nu in orders:
        ev = BesselEvaluator(nu, x_switch=x_switch) if x_switch is not None else BesselEvaluator(nu)
        worst = max(worst, float(np.max(bessel_bound_margin(nu, xs, ev))))
    return worst


def bessel_oracle_error(x_switch: float | None = None) -> float:
    """|J_2(1) - mpmath besselj at 50 digits| and a few more spot values, relative to the envelope."""
    worst = 0.0
    with mpmath.workdps(50):
        for nu, x in ((2, 1.0), (2, 15.0), (4, 30.0), (6, 60.0), (2, 500.0)):
            ev = BesselEvaluator(nu, x_switch=x_switch) if x_switch is not None else BesselEvaluator(nu)
            ref = float(mpmath.besselj(nu, x))
            worst = max(worst, abs(float(ev(x)) - ref) / max(1.0, abs(ref)))
    return worst


# ---------------------------------------------------------------- suites


def suite(module: str, fault: str | None = None) -> list[CheckResult]:
    xs = 2.0 if fault == "bessel-x-switch" else None
    if module == "arith":
        return [
            CheckResult("arith", "odd-orthogonality", orthogonality_error(), 1e-10),
            CheckResult("arith", "full-orthogonality", full_orthogonality_error(), 1e-10),
        ]
    if module == "family":
        return [
            CheckResult("family", "ramanujan-reduction", ramanujan_error(t_max=30), 1e-9),
            CheckResult("family", "kernel-vs-brute", v_sum_agreement(t_max=30), 1e-9),
        ]
    if module == "special":
        return [
            CheckResult("special", "partition-of-unity", partition_residual(), 1e-10),
            CheckResult("special", "bessel-overlap", bessel_overlap_error(x_switch=xs), 1e-9),
            CheckResult("special", "bessel-envelope", bessel_margin(x_switch=xs), 1.3),
            CheckResult("special", "bessel-oracle", bessel_oracle_error(x_switch=xs), 1e-12),
        ]
    if module == "testfn":
        from .testfn import bump_pair, fejer_pair, pair_selfcheck

        return [
            CheckResult("testfn", "fejer-inversion", pair_selfcheck(fejer_pair(1.0)), 1e-7),
            CheckResult("testfn", "bump-inversion", pair_selfcheck(bump_pair(8.0 / 3.0)), 1e-7),
        ]
    if module == "density":
        from .density import one_level_density
        from .family import FamilyParams, TruncationPolicy
        from .testfn import fejer_pair

        rep = one_level_density(FamilyParams(31, 3), fejer_pair(1.0), TruncationPolicy(tail_eps=1e-5, st_cap=512))
        return [
            CheckResult("density", "s1+s2=m_off", rep.reassembly_residual, 1e-8),
            CheckResult("density", "m_off+eps_off=s_n", rep.split_residual, 1e-8),
        ]
    if module == "analysis":
        from .analysis import kernel_value, nonvanishing_bound

        return [
            CheckResult("analysis", "nonvanishing-8/3", float(nonvanishing_bound(Fraction(8, 3)) != Fraction(5, 8)), 0.0),
            CheckResult("analysis", "kernel-at-0", abs(kernel_value(8.0 / 3.0, 0.0) - 8.0 / 3.0), 0.0),
        ]
    raise ValueError(f"unknown suite {module!r}")


SUITES = ("arith", "family", "special", "testfn", "density", "analysis")
