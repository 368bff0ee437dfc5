from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gamma1_lab import analysis
from gamma1_lab.arith import character_group
from gamma1_lab.errors import DegenerateRegression, OutOfRange
from gamma1_lab.family import FamilyParams, TruncationPolicy
from gamma1_lab.testfn import fejer_pair

F1 = fejer_pair(1.0)


def test_regression_recovers_power_law():
    qs = [101, 211, 401, 809]
    reg = analysis.loglog_regression(qs, [3.0 * q**-2 for q in qs])
    assert reg.slope == pytest.approx(-2.0, abs=1e-12)
    assert reg.r_squared == pytest.approx(1.0, abs=1e-12)
    assert reg.refit().slope == pytest.approx(reg.slope, abs=1e-15)


def test_regression_degenerate():
    with pytest.raises(DegenerateRegression):
        analysis.loglog_regression([1, 2, 3], [0.0, 0.0, 0.0])


def test_worst_case_slope_brackets_fit():
    qs = [101, 211, 401, 809]
    ys = [q**-2.0 for q in qs]
    tails = [0.1 * y for y in ys]
    worst = analysis.worst_case_slope(qs, ys, tails)
    assert worst > -2.0


def test_decay_regression_needs_four_points():
    with pytest.raises(ValueError):
        analysis.delta_decay_regression([FamilyParams(q, 3) for q in (101, 211, 401)], 1, 1)


@pytest.mark.slow
@pytest.mark.parametrize("m,n", [(1, 1), (2, 3)])
def test_delta_decay_slope(m, n):
    params = [FamilyParams(q, 3) for q in (101, 211, 401, 809)]
    run = analysis.delta_decay_regression(params, m, n, TruncationPolicy(tail_eps=1e-9))
    assert run.regression.slope <= -1.8 and run.worst_slope <= -1.8


def test_envelope_fit_on_exact_envelope():
    qs = np.arange(101, 1000, 50)
    reg = analysis.envelope_fit(qs, 0.3 / np.log(qs))
    assert reg.slope == pytest.approx(0.3, rel=1e-12) and abs(reg.intercept) < 1e-12


def test_block_classification():
    assert analysis.classify_block(64, 4, 4, 101) == "case1"
    assert analysis.classify_block(64, 0.01, 0.5, 101) == "case3"
    spec = analysis.BlockSpec(64, 0.5, 0.5, 101)
    assert spec.case_label == "case2"
    with pytest.raises(ValueError):
        analysis.BlockSpec(64, 4, 4, 101, case_label="case3")


def test_block_rejection_and_empty_block():
    params = FamilyParams(101, 3)
    with pytest.raises(OutOfRange):
        analysis.block_D(params, F1, analysis.BlockSpec(128, 1, 1, 101))
    # p ~ 1 has no primes in (3/4, 2)
    assert analysis.block_D(params, F1, analysis.BlockSpec(1, 2, 2, 101)) == 0
    specs, rejected = analysis.block_grid(101, F1, [16, 128], [1], [2])
    assert len(specs) == 1 and len(rejected) == 1


def test_blocks_partition_the_p_sum():
    params = FamilyParams(101, 3)
    whole = analysis.block_D_unwindowed_p(params, F1, 2.0, 4.0)
    parts = sum(analysis.block_D(params, F1, analysis.BlockSpec(P, 2.0, 4.0, 101))
                for P in analysis.dyadic_p_grid(params, F1) if P < 101)
    assert abs(whole - parts) <= 1e-12 * max(1.0, abs(whole))


def test_char_probe():
    grp = character_group(7)
    idx = 1
    conj = next(i for i, c in enumerate(grp.characters)
                if np.allclose(c.values, np.conj(grp.characters[idx].values)))
    a = analysis.char_prime_sum_probe(7, idx, 0.5, 1e3)
    b = analysis.char_prime_sum_probe(7, conj, 0.5, 1e3)
    assert abs(a.value - np.conj(b.value)) < 1e-10
    assert math.isfinite(a.comparison) and not a.trivial_character
    assert analysis.char_prime_sum_probe(7, idx, 0.5, 0.5).value == 0
    # direct sum oracle
    from gamma1_lab.arith import primes_below
    from gamma1_lab.special import dyadic_window
    direct = sum(grp.characters[idx](p) * math.log(p) * dyadic_window(p / 1e3) / p**0.5
                 for p in primes_below(2001) if p != 7)
    assert abs(a.value - direct) < 1e-9
    with pytest.raises(OutOfRange):
        analysis.char_prime_sum_probe(7, idx, 6.0, 1e3)


def test_kernel_values():
    assert analysis.kernel_value(8 / 3, 0.0) == 8 / 3
    assert analysis.kernel_value(1.0, 0.0) == 1.0
    assert abs(analysis.kernel_value(2.0, 0.5)) < 1e-16


@given(st.floats(0.1, 5.0), st.floats(-1e-6, 1e-6))
def test_kernel_continuous_at_zero(delta, x):
    assert analysis.kernel_value(delta, x) == pytest.approx(delta, rel=1e-9)


def test_nonvanishing_examples():
    assert analysis.nonvanishing_bound(Fraction(8, 3)) == Fraction(5, 8)
    assert analysis.nonvanishing_bound("8/3") == Fraction(5, 8)
    assert analysis.nonvanishing_bound(1) == 0
    assert analysis.nonvanishing_bound(2) == Fraction(1, 2)
    assert analysis.nonvanishing_bound(2.5) == pytest.approx(0.6)
    with pytest.raises(OutOfRange):
        analysis.nonvanishing_bound(Fraction(1, 2))
