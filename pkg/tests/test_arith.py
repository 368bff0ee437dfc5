from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gamma1_lab import arith
from gamma1_lab.errors import BudgetExceeded, NotInvertible


def _trial_division(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, int(math.isqrt(n)) + 1))


def test_sieve_examples():
    assert arith.sieve_primes(10) == [2, 3, 5, 7]
    assert arith.sieve_primes(1) == []
    ps = arith.sieve_primes(100)
    assert len(ps) == 25 and ps[-1] == 97


def test_sieve_matches_trial_division():
    assert arith.sieve_primes(2000) == [n for n in range(2001) if _trial_division(n)]


def test_primes_below_is_strict():
    assert arith.primes_below(7) == [2, 3, 5]
    assert arith.primes_below(7.5) == [2, 3, 5, 7]
    assert arith.primes_below(2) == []


def test_multiplicative_examples():
    assert arith.euler_phi(5) == 4
    assert arith.mobius(4) == 0
    assert arith.von_mangoldt(8) == pytest.approx(math.log(2), abs=1e-15)
    assert arith.von_mangoldt(12) == 0.0
    assert arith.divisor_count(12) == 6


@pytest.mark.parametrize("fn", [arith.euler_phi, arith.mobius, arith.von_mangoldt, arith.divisor_count])
def test_zero_rejected(fn):
    with pytest.raises(ValueError):
        fn(0)


@given(st.integers(1, 5000))
def test_phi_and_mobius_against_brute_force(n):
    assert arith.euler_phi(n) == sum(1 for a in range(1, n + 1) if math.gcd(a, n) == 1)
    f = arith.factorize(n)
    expect = 0 if any(e > 1 for _, e in f) else (-1) ** len(f)
    assert arith.mobius(n) == expect


def test_mod_inverse_examples():
    assert arith.mod_inverse(3, 7) == 5
    assert arith.mod_inverse(2, 3) == 2
    with pytest.raises(NotInvertible):
        arith.mod_inverse(2, 4)


@given(st.integers(2, 400))
def test_inverse_table_consistent(t):
    inv = arith.inverse_table(t)
    for a in range(t):
        if math.gcd(a, t) == 1:
            assert (a * inv[a]) % t == 1
        else:
            assert inv[a] == -1 or inv[a] < 0


def test_character_group_small_cases():
    g1 = arith.character_group(1)
    assert len(g1) == 1 and g1.value_table[0, 0] == 1
    g5 = arith.character_group(5)
    assert len(g5) == 4 and len(g5.odd_indices()) == 2
    g8 = arith.character_group(8)
    assert len(g8) == 4
    units = g8.structure.units
    tab = g8.value_table[:, units]
    assert np.abs(tab @ np.conj(tab).T - 4 * np.eye(4)).max() < 1e-12


def test_character_group_budget():
    with pytest.raises(BudgetExceeded):
        arith.character_group(1009, max_entries=1000)


def test_odd_character_average_examples():
    assert arith.odd_character_average(5, 1, 1) == 1
    assert arith.odd_character_average(5, 4, 1) == -1
    assert arith.odd_character_average(5, 5, 1) == 0


@pytest.mark.parametrize("t", [7, 12, 15, 16, 45, 101])
def test_unit_transform_round_trip(t):
    us = arith.unit_structure(t)
    rng = np.random.default_rng(t)
    vals = rng.normal(size=(t, 3)) + 1j * rng.normal(size=(t, 3))
    vals[[a for a in range(t) if math.gcd(a, t) != 1]] = 0
    A = us.transform(vals)
    grp = arith.character_group(t)
    direct = np.conj(grp.value_table) @ vals
    assert np.abs(A - direct).max() < 1e-10


def test_roots_of_unity_read_only():
    r = arith.roots_of_unity(6)
    assert abs(r[1] - arith.e_rational(1, 6)) < 1e-15
    with pytest.raises(ValueError):
        r[0] = 2


@settings(max_examples=30)
@given(st.integers(3, 60), st.integers(0, 200), st.integers(0, 200))
def test_odd_average_closed_form(q, m, n):
    assert arith.odd_character_average(q, m, n) == arith.odd_character_closed_form(q, m, n)
