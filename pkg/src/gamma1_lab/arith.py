"""Exact integer arithmetic, multiplicative functions and Dirichlet character groups.

Characters mod t are built from the cyclic decomposition of (Z/tZ)^*: a primitive
root for every odd prime power and the <-1> x <5> pair for 2^e, e >= 3. A character
is indexed by its exponent vector ``a`` and takes the value

    chi_a(m) = e(sum_i a_i * log_i(m) / n_i),

with the phase reduced to a single fraction in integers before any trig call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, NotInvertible

MAX_MODULUS = 100_000
# phi(t) * t complex entries; 2**24 entries is 256 MiB.
MAX_TABLE_ENTRIES = 1 << 24


# ---------------------------------------------------------------- primes / factoring


def sieve_primes(limit: int) -> list[int]:
    """All primes p with 2 <= p <= limit, ascending."""
    if limit < 0:
        raise ValueError("limit must be >= 0")
    if limit < 2:
        return []
    sieve = bytearray(b"\x01") * (limit + 1)
    sieve[:2] = b"\x00\x00"
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = b"\x00" * ((limit - p * p) // p + 1)
    return [i for i, flag in enumerate(sieve) if flag]


def primes_below(bound: float) -> list[int]:
    """Primes p with p < bound (strict)."""
    if bound <= 2:
        return []
    limit = math.ceil(bound) - 1
    return [p for p in sieve_primes(limit) if p < bound]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@lru_cache(maxsize=65536)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorisation as ((p, e), ...) with p ascending. factorize(1) == ()."""
    if n < 1:
        raise ValueError(f"factorize needs n >= 1, got {n}")
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def _check_positive(n: int) -> None:
    if n < 1:
        raise ValueError(f"argument must be >= 1, got {n}")


def euler_phi(n: int) -> int:
    _check_positive(n)
    result = n
    for p, _ in factorize(n):
        result -= result // p
    return result


def mobius(n: int) -> int:
    _check_positive(n)
    fac = factorize(n)
    if any(e > 1 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def von_mangoldt(n: int) -> float:
    """log p if n = p^b (b >= 1), else 0."""
    _check_positive(n)
    fac = factorize(n)
    if len(fac) == 1:
        return math.log(fac[0][0])
    return 0.0


def divisor_count(n: int) -> int:
    _check_positive(n)
    return math.prod(e + 1 for _, e in factorize(n))


def prime_power_base(n: int) -> int | None:
    """p if n = p^b with b >= 1, else None."""
    if n < 2:
        return None
    fac = factorize(n)
    return fac[0][0] if len(fac) == 1 else None


def mod_inverse(a: int, t: int) -> int:
    """x in [0, t) with a*x = 1 (mod t). By convention the inverse mod 1 is 0."""
    if t < 1:
        raise ValueError("modulus must be >= 1")
    if t == 1:
        return 0
    try:
        return pow(a, -1, t)
    except ValueError:
        raise NotInvertible(a, t) from None


def inverse_table(t: int) -> np.ndarray:
    """inv[x] = x^{-1} mod t, or -1 where gcd(x, t) > 1 (int64, length t)."""
    inv = np.full(t, -1, dtype=np.int64)
    if t == 1:
        inv[0] = 0
        return inv
    for x in range(1, t):
        if math.gcd(x, t) == 1:
            inv[x] = pow(x, -1, t)
    return inv


# ---------------------------------------------------------------- exact phases


def e_rational(num: int, den: int) -> complex:
    """e(num/den) = exp(2 pi i num/den), phase reduced in integers first."""
    num %= den
    g = math.gcd(num, den)
    num //= g
    den //= g
    if num == 0:
        return 1.0 + 0.0j
    ang = 2.0 * math.pi * num / den
    return complex(math.cos(ang), math.sin(ang))


@lru_cache(maxsize=256)
def _roots_cached(n: int) -> np.ndarray:
    j = np.arange(n, dtype=np.int64)
    g = np.gcd(j, n)
    num = j // g
    den = n // g
    ang = 2.0 * np.pi * num / den
    out = np.cos(ang) + 1j * np.sin(ang)
    out[0] = 1.0
    out.setflags(write=False)
    return out


def roots_of_unity(n: int) -> np.ndarray:
    """r[j] = e(j/n) for 0 <= j < n, each phase reduced to lowest terms.

    Equal reduced phases give bit-identical values across different n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return _roots_cached(n)


# ---------------------------------------------------------------- character groups


def primitive_root(p: int) -> int:
    """Smallest primitive root modulo an odd prime p."""
    if p == 2:
        return 1
    order = p - 1
    qs = [r for r, _ in factorize(order)]
    for g in range(2, p):
        if all(pow(g, order // r, p) != 1 for r in qs):
            return g
    raise ValueError(f"no primitive root mod {p}")  # unreachable for prime p


def _odd_prime_power_generator(p: int, e: int) -> int:
    g = primitive_root(p)
    if e > 1 and pow(g, p - 1, p * p) == 1:
        g += p
    return g


@dataclass(frozen=True)
class _Component:
    modulus: int  # prime power p^e this cyclic factor lives on
    order: int
    logs: np.ndarray  # log of each residue mod `modulus`, -1 if not in the factor's domain


def _components(t: int) -> list[_Component]:
    comps: list[_Component] = []
    for p, e in factorize(t):
        pe = p**e
        if p == 2:
            if e == 1:
                continue
            # sign component: m = (-1)^a * 5^b mod 2^e
            sign = np.full(pe, -1, dtype=np.int64)
            sign[1::4] = 0
            sign[3::4] = 1
            comps.append(_Component(pe, 2, sign))
            if e >= 3:
                n = 1 << (e - 2)
                logs = np.full(pe, -1, dtype=np.int64)
                x = 1
                for j in range(n):
                    logs[x] = j
                    logs[pe - x] = j  # -5^j shares the 5-exponent
                    x = x * 5 % pe
                comps.append(_Component(pe, n, logs))
        else:
            g = _odd_prime_power_generator(p, e)
            n = pe - pe // p
            logs = np.full(pe, -1, dtype=np.int64)
            x = 1
            for j in range(n):
                logs[x] = j
                x = x * g % pe
            comps.append(_Component(pe, n, logs))
    return comps


class UnitStructure:
    """Discrete-log coordinates of (Z/tZ)^* as a product of cyclic groups.

    ``exponents[m]`` is the exponent vector of residue m (row of -1 if gcd(m,t) > 1).
    Characters are enumerated in C order over ``orders`` (index 0 is trivial).
    """

    def __init__(self, t: int):
        if t < 1:
            raise ValueError("modulus must be >= 1")
        self.modulus = t
        comps = _components(t)
        self.orders: tuple[int, ...] = tuple(c.order for c in comps) or (1,)
        residues = np.arange(t, dtype=np.int64)
        self.unit_mask = np.gcd(residues, t) == 1 if t > 1 else np.ones(1, dtype=bool)
        if comps:
            cols = [c.logs[residues % c.modulus] for c in comps]
            exps = np.stack(cols, axis=1)
        else:
            exps = np.zeros((t, 1), dtype=np.int64)
        exps[~self.unit_mask] = -1
        self.exponents = exps
        self.size = int(np.prod(self.orders))
        # phase of chi_a(m) is sum_i a_i x_i / n_i = (sum_i a_i x_i (N/n_i)) / N
        self.phase_den = reduce(math.lcm, self.orders, 1)
        self._scale = np.array([self.phase_den // n for n in self.orders], dtype=np.int64)
        units = np.flatnonzero(self.unit_mask)
        self.units = units
        self._flat_index = np.ravel_multi_index(exps[units].T, self.orders)

    def character_exponents(self) -> np.ndarray:
        """(phi(t), r) array of exponent vectors a, in enumeration order."""
        grids = np.indices(self.orders).reshape(len(self.orders), -1).T
        return grids.astype(np.int64)

    def transform(self, values: np.ndarray) -> np.ndarray:
        """A[chi] = sum over units m of values[m] * conj(chi(m)), all chi at once.

        ``values`` has length t (entries at non-units ignored) or shape (t, ...).
        """
        values = np.asarray(values)
        grid = np.zeros(self.orders + values.shape[1:], dtype=complex)
        grid.reshape((self.size,) + values.shape[1:])[self._flat_index] = values[self.units]
        axes = tuple(range(len(self.orders)))
        out = np.fft.fftn(grid, axes=axes)
        return out.reshape((self.size,) + values.shape[1:])

    def cotransform(self, values: np.ndarray) -> np.ndarray:
        """B[chi] = sum over units m of values[m] * chi(m)."""
        return np.conj(self.transform(np.conj(np.asarray(values))))


@lru_cache(maxsize=512)
def unit_structure(t: int) -> UnitStructure:
    return UnitStructure(t)


@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    component_exponents: tuple[int, ...]
    parity: int
    is_trivial: bool
    values: np.ndarray = field(repr=False, compare=False)

    def __call__(self, m: int) -> complex:
        return complex(self.values[m % self.modulus])

    def conjugate_index(self, orders: Sequence[int]) -> tuple[int, ...]:
        return tuple((-a) % n for a, n in zip(self.component_exponents, orders))


@dataclass(frozen=True)
class CharacterGroup:
    modulus: int
    characters: tuple[DirichletCharacter, ...]
    value_table: np.ndarray = field(repr=False)
    structure: UnitStructure = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.characters)

    @property
    def trivial(self) -> DirichletCharacter:
        return self.characters[0]

    def odd_indices(self) -> list[int]:
        return [i for i, c in enumerate(self.characters) if c.parity == -1]


def _value_table(us: UnitStructure) -> np.ndarray:
    t = us.modulus
    avec = us.character_exponents()  # (phi, r)
    table = np.zeros((us.size, t), dtype=complex)
    if t == 1:
        table[0, 0] = 1.0
        return table
    x = us.exponents[us.units]  # (phi, r)
    num = (avec * us._scale) @ x.T % us.phase_den  # exact integer phases
    table[:, us.units] = roots_of_unity(us.phase_den)[num]
    return table


@lru_cache(maxsize=64)
def character_group(t: int, max_entries: int = MAX_TABLE_ENTRIES) -> CharacterGroup:
    """The full group of Dirichlet characters mod t with an eager value table."""
    if t < 1:
        raise ValueError("modulus must be >= 1")
    phi = euler_phi(t)
    if t > MAX_MODULUS or phi * t > max_entries:
        raise BudgetExceeded(f"character table for t={t} needs {phi * t} entries")
    us = unit_structure(t)
    table = _value_table(us)
    table.setflags(write=False)
    avec = us.character_exponents()
    minus_one = (t - 1) % t
    chars = []
    for i, a in enumerate(avec):
        row = table[i]
        par = 1 if t <= 2 else int(round(row[minus_one].real))
        chars.append(
            DirichletCharacter(
                modulus=t,
                component_exponents=tuple(int(v) for v in a),
                parity=par,
                is_trivial=not a.any(),
                values=row,
            )
        )
    return CharacterGroup(t, tuple(chars), table, us)


def odd_character_closed_form(q: int, m: int, n: int) -> int:
    """Right-hand side of the odd-character orthogonality relation."""
    if math.gcd(m * n, q) != 1:
        return 0
    if (m - n) % q == 0:
        return 1
    if (m + n) % q == 0:
        return -1
    return 0


def odd_character_average(q: int, m: int, n: int, tol: float = 1e-10) -> float:
    """(2/phi(q)) * sum over odd chi mod q of chi(m) conj(chi(n)), from the table.

    The table value is checked against the closed form; a mismatch beyond ``tol``
    raises AssertionError.
    """
    if q < 3:
        raise ValueError("q must be >= 3")
    grp = character_group(q)
    odd = grp.odd_indices()
    rows = grp.value_table[odd]
    total = np.sum(rows[:, m % q] * np.conj(rows[:, n % q]))
    value = 2.0 * total / euler_phi(q)
    expected = odd_character_closed_form(q, m, n)
    if abs(value - expected) > tol:
        raise AssertionError(f"odd-character average mismatch at q={q}, m={m}, n={n}: {value} vs {expected}")
    return float(round(value.real))
