"""Petersson-type sums for the Gamma_1(q) family: V_qs, sigma, Delta and certified tails.

All (s, t) lattice sums run over s*t <= U with U chosen from a rigorous
upper bound on the discarded tail. Enumeration is t outer, s inner, and
accumulation is compensated and happens in that fixed global order, so
results do not depend on the thread count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import zeta

from . import kernels
from .arith import MAX_MODULUS, euler_phi, mobius, roots_of_unity
from .errors import InternalError, TailNotCertified
from .special import bessel_j

_I_POW = (1.0 + 0.0j, -1.0j, -1.0 + 0.0j, 1.0j)  # i^{-k} indexed by k mod 4


@dataclass(frozen=True)
class FamilyParams:
    q: int
    k: int

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 3:
            raise ValueError(f"q must be an integer >= 3, got {self.q}")
        if int(self.k) != self.k or self.k < 3 or self.k % 2 == 0:
            raise ValueError(f"k must be an odd integer >= 3, got {self.k}")


@dataclass(frozen=True)
class TruncationPolicy:
    """How far to push the (s, t) lattice and how to run it.

    ``strict`` turns an uncertified tail into a TailNotCertified exception;
    otherwise the best value is returned with ``certified=False``.
    """

    tail_eps: float = 1e-4
    st_cap: int = 4096
    deterministic: bool = True
    threads: int = 1
    strict: bool = False

    def __post_init__(self):
        if not (self.tail_eps > 0):
            raise ValueError("tail_eps must be positive")
        if self.st_cap < 1 or self.st_cap > MAX_MODULUS:
            raise ValueError(f"st_cap must lie in [1, {MAX_MODULUS}]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def workers(self) -> int:
        return 1 if self.deterministic else self.threads


def default_threads() -> int:
    raw = os.environ.get("GAMMA1_LAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return 1


@dataclass(frozen=True)
class PeterssonValue:
    value: float
    tail_bound: float
    terms_used: int
    certified: bool = True
    cutoff: int = 0


def kappa(k: int, z) -> float:
    """2 Re(i^{-k} z)."""
    if k % 2 == 0:
        raise ValueError("k must be odd")
    return 2.0 * (_I_POW[k % 4] * complex(z)).real


# ---------------------------------------------------------------- V_qs


@lru_cache(maxsize=512)
def _tables(t: int):
    inv = kernels.inverse_table(t)
    inv.setflags(write=False)
    return inv, roots_of_unity(t)


def _reading_is_literal(n: int, reading: str) -> bool:
    if reading == "auto":
        return n == 1
    if reading not in ("literal", "scaled"):
        raise ValueError(f"unknown reading {reading!r}")
    return reading == "literal"


def v_sum(q: int, s: int, m: int, n: int, t: int, reading: str = "literal") -> complex:
    """Sum over x mod t with x(x+qs) a unit of e((m xbar - w(x))/t).

    ``literal``: w(x) = inverse of n x + qs. ``scaled``: w(x) = n times the
    inverse of x + qs. The two agree when n = 1.
    """
    if min(q, s, t) < 1 or min(m, n) < 0:
        raise ValueError("need q, s, t >= 1 and m, n >= 0")
    if n != 1 and math.gcd(n, t) != 1:
        raise ValueError("n != 1 requires gcd(n, t) = 1")
    if t == 1:
        return 1.0 + 0.0j
    inv, roots = _tables(t)
    out, fails = kernels.vsum_grid(
        t, (q * s) % t, np.array([m], dtype=np.int64), np.array([n], dtype=np.int64),
        inv, roots, reading == "literal",
    )
    if fails:
        raise InternalError(f"inverse of n*x + qs failed for {fails} admissible residues (t={t}, n={n})")
    return complex(out[0, 0])


def v_sum_all_m(q: int, s: int, t: int) -> np.ndarray:
    """V(m, 1; t) for every residue m mod t, via one FFT."""
    if t == 1:
        return np.ones(1, dtype=complex)
    inv, roots = _tables(t)
    c = kernels.admissible_coefficients(t, (q * s) % t, inv, roots)
    return t * np.fft.ifft(c)


def v_sum_m_average(q: int, s: int, t: int) -> tuple[complex, complex]:
    """(sum over units m of V(m,1;t), mu(t) V(0,1;t))."""
    ms = [m for m in range(t) if math.gcd(m, t) == 1] if t > 1 else [0]
    inv, roots = _tables(t)
    grid, _ = kernels.vsum_grid(
        t, (q * s) % t, np.array(ms, dtype=np.int64), np.array([1], dtype=np.int64), inv, roots, True
    )
    lhs = complex(math.fsum(grid[:, 0].real) + 1j * math.fsum(grid[:, 0].imag))
    rhs = mobius(t) * v_sum(q, s, 0, 1, t)
    return lhs, rhs


# ---------------------------------------------------------------- tails


def lattice_tail(U: float, a: float, b: float) -> float:
    """Upper bound for the sum of s^{-a} t^{-b} over positive s, t with s*t > U (a, b > 1)."""
    if a <= 1 or b <= 1:
        raise ValueError("need a, b > 1")
    U = float(U)
    if U < 1:
        return float(zeta(a) * zeta(b))
    n = int(math.floor(U))
    s = np.arange(1, n + 1, dtype=float)
    # s <= U: the t-sum over t > U/s is at most T^{-b} + T^{1-b}/(b-1), T = U/s
    part1 = U**-b * math.fsum(s ** (b - a)) + U ** (1 - b) / (b - 1) * math.fsum(s ** (b - 1 - a))
    # s > U: every t contributes
    part2 = (U**-a + U ** (1 - a) / (a - 1)) * float(zeta(b))
    return part1 + part2


def bessel_envelope_constant(q: int, k: int, mn: float) -> float:
    """(2 pi/q) (2 pi sqrt(mn)/q)^{k-1}/(k-1)!: |term(s,t)| <= this * phi(t) (st)^{-k}."""
    return (2.0 * math.pi / q) * (2.0 * math.pi * math.sqrt(mn) / q) ** (k - 1) / math.factorial(k - 1)


def sigma_tail_bound(q: int, k: int, mn: float, U: float) -> float:
    """Bound on the discarded part of sigma(m, n) beyond s*t <= U.

    Uses |J_nu(x)| <= (x/2)^nu/nu!, |V| <= phi(t) <= t and the factor 2 of kappa.
    """
    return 2.0 * bessel_envelope_constant(q, k, mn) * lattice_tail(U, k, k - 1)


def choose_cutoff(tail: Callable[[int], float], eps: float, cap: int) -> tuple[int, float, bool]:
    """Smallest U <= cap (up to bisection) with tail(U) <= eps; (U, tail(U), certified)."""
    if tail(1) <= eps:
        return 1, tail(1), True
    lo, hi = 1, 2
    while hi < cap and tail(hi) > eps:
        lo, hi = hi, hi * 2
    hi = min(hi, cap)
    if tail(hi) > eps:
        return cap, tail(cap), False
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi, tail(hi), True


# ---------------------------------------------------------------- lattice engine


class CompensatedSum:
    """Neumaier summation of complex values or arrays, real and imaginary parts separately."""

    def __init__(self, shape=()):
        self._s = np.zeros((2,) + tuple(shape))
        self._c = np.zeros((2,) + tuple(shape))

    def add(self, x) -> None:
        x = np.broadcast_to(np.asarray(x, dtype=complex), self._s.shape[1:])
        xv = np.stack([x.real, x.imag])
        tot = self._s + xv
        big = np.abs(self._s) >= np.abs(xv)
        self._c += np.where(big, (self._s - tot) + xv, (xv - tot) + self._s)
        self._s = tot

    @property
    def value(self):
        out = self._s + self._c
        z = out[0] + 1j * out[1]
        return complex(z) if z.ndim == 0 else z


def _t_chunks(U: int, workers: int) -> list[range]:
    # balance by pair count ~ sum over t of U/t
    if workers <= 1:
        return [range(1, U + 1)]
    weights = np.array([U // t for t in range(1, U + 1)], dtype=float)
    cum = np.cumsum(weights)
    edges = [0]
    for w in range(1, workers):
        edges.append(int(np.searchsorted(cum, cum[-1] * w / workers)) + 1)
    edges.append(U)
    return [range(a + 1, b + 1) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def lattice_sum(U: int, row: Callable[[int, int], object], workers: int = 1, shape=()) -> tuple[object, int]:
    """Sum over s*t <= U, one row per t (ascending) covering s = 1..U//t.

    ``row(t, S)`` returns the total over s <= S for that t (or None). With
    several workers rows are computed concurrently but accumulated in the
    same order, so the result does not depend on ``workers``.
    Returns (total, number of (s, t) pairs).
    """
    acc = CompensatedSum(shape)
    pairs = sum(U // t for t in range(1, U + 1))
    chunks = _t_chunks(U, workers)
    if len(chunks) == 1:
        for t in chunks[0]:
            val = row(t, U // t)
            if val is not None:
                acc.add(val)
    else:
        def run(ts: range) -> list:
            return [row(t, U // t) for t in ts]

        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            for block in pool.map(run, chunks):
                for val in block:
                    if val is not None:
                        acc.add(val)
    return acc.value, pairs


def _phase_factor(num, den):
    """e(num/den) with num reduced mod den in integers first (broadcasting)."""
    r = np.mod(num, den).astype(float) / den
    return np.exp(2j * np.pi * r)


def _shift_table(q: int, t: int, S: int):
    """Distinct shifts qs mod t for s = 1..S and the index of each s into them."""
    shifts = (q * np.arange(1, S + 1, dtype=np.int64)) % t
    return np.unique(shifts, return_inverse=True)


def v_rows(q: int, t: int, S: int, ms: np.ndarray, n: int = 1, literal: bool = True,
           method: str = "direct") -> np.ndarray:
    """V(m_j, n; t) with shift qs for s = 1..S, as an (S, len(ms)) array.

    ``fft`` (n = 1 only) transforms the admissible coefficients once per
    distinct shift; ``direct`` sums exact roots of unity residue by residue.
    """
    uniq, back = _shift_table(q, t, S)
    inv, roots = _tables(t)
    if method == "fft":
        if n != 1:
            raise ValueError("fft route needs n = 1")
        coef = np.stack([kernels.admissible_coefficients(t, int(A), inv, roots) for A in uniq])
        full = t * np.fft.ifft(coef, axis=1)
        table = full[:, np.mod(ms, t)]
    else:
        table, fails = kernels.vsum_batch(t, uniq, ms, n, inv, roots, literal)
        if fails:
            raise InternalError(f"inverse of n*x + qs failed at t={t}, n={n}")
    return table[back.reshape(-1)]


def sigma_vector(
    params: FamilyParams,
    ms: Sequence[int],
    U: int,
    n: int = 1,
    restrict: str = "all",
    reading: str = "auto",
    workers: int = 1,
    method: str = "auto",
    weights: Sequence[float] | None = None,
) -> tuple[object, int]:
    """Pre-kappa lattice sums over s*t <= U of (2 pi/qst) V(m, n; t) e((m+n)/qst) J_{k-1}(4 pi sqrt(mn)/qst).

    Returns one complex value per m, or the weighted total when ``weights``
    is given. ``restrict`` keeps, per (m, t), all terms, only gcd(m, t) = 1
    ("coprime") or only gcd(m, t) > 1 ("complement").
    """
    if restrict not in ("all", "coprime", "complement"):
        raise ValueError(f"unknown restriction {restrict!r}")
    if method not in ("auto", "fft", "direct"):
        raise ValueError(f"unknown method {method!r}")
    q, k = params.q, params.k
    ms = np.asarray(ms, dtype=np.int64)
    w = None if weights is None else np.asarray(weights, dtype=float)
    shape = () if w is not None else (ms.size,)
    if ms.size == 0:
        return (0.0 + 0.0j if w is not None else np.zeros(0, dtype=complex)), 0
    literal = _reading_is_literal(n, reading)
    if method == "auto":
        method = "fft" if n == 1 and ms.size > 16 else "direct"
    root_mn = np.sqrt(ms.astype(float) * n)

    def row(t: int, S: int):
        if literal and n != 1 and math.gcd(n, t) != 1:
            raise InternalError(f"literal reading undefined for n={n}, t={t}")
        if restrict == "all":
            sel = np.ones(ms.size, dtype=bool)
        else:
            g = np.gcd(ms, t) == 1
            sel = g if restrict == "coprime" else ~g
            if not np.any(sel):
                return None
        mm, rr = ms[sel], root_mn[sel]
        V = v_rows(q, t, S, mm, n, literal, method)
        den = q * t * np.arange(1, S + 1, dtype=np.int64)
        x = 4.0 * math.pi * rr[None, :] / den[:, None]
        vals = (2.0 * math.pi / den)[:, None] * V * _phase_factor(mm[None, :] + n, den[:, None]) * bessel_j(k - 1, x)
        if w is not None:
            return np.sum(vals @ w[sel])
        out = np.zeros(ms.size, dtype=complex)
        out[sel] = vals.sum(axis=0)
        return out

    return lattice_sum(U, row, workers=workers, shape=shape)


def weighted_sigma_sum(params: FamilyParams, ms, weights, U: int, n: int = 1, restrict: str = "all",
                       reading: str = "auto", workers: int = 1, method: str = "auto") -> tuple[complex, int]:
    """sum_i w_i times the pre-kappa lattice sum for (m_i, n), see sigma_vector."""
    return sigma_vector(params, ms, U, n, restrict, reading, workers, method, weights=weights)


def weighted_sigma_tail(params: FamilyParams, ms, weights, U: float, n: int = 1) -> float:
    q, k = params.q, params.k
    tot = math.fsum(abs(float(wi)) * bessel_envelope_constant(q, k, float(mi) * n) for mi, wi in zip(ms, weights))
    return 2.0 * tot * lattice_tail(U, k, k - 1)


def certified_cutoff(tail: Callable[[int], float], policy: TruncationPolicy, what: str) -> tuple[int, float, bool]:
    U, bound, ok = choose_cutoff(tail, policy.tail_eps, policy.st_cap)
    if not ok and policy.strict:
        raise TailNotCertified(
            f"{what}: tail bound {bound:.3e} > tail_eps {policy.tail_eps:.3e} at st_cap {policy.st_cap}",
            value=None,
        )
    return U, bound, ok


def sigma_off(m: int, n: int, params: FamilyParams, policy: TruncationPolicy | None = None,
              reading: str = "auto") -> PeterssonValue:
    """sigma(m, n) = kappa of the (s, t) lattice sum, truncated with a certified tail."""
    if m < 1 or n < 1:
        raise ValueError("need m, n >= 1")
    policy = policy or TruncationPolicy()
    U, bound, ok = choose_cutoff(
        lambda u: sigma_tail_bound(params.q, params.k, m * n, u), policy.tail_eps, policy.st_cap
    )
    raw, pairs = weighted_sigma_sum(params, [m], [1.0], U, n=n, reading=reading, workers=policy.workers)
    val = PeterssonValue(kappa(params.k, raw), bound, pairs, ok, U)
    if not ok and policy.strict:
        raise TailNotCertified(
            f"sigma({m},{n}): tail bound {bound:.3e} > {policy.tail_eps:.3e} at st_cap {policy.st_cap}",
            value=val,
        )
    return val


def petersson_delta(m: int, n: int, params: FamilyParams, policy: TruncationPolicy | None = None,
                    reading: str = "auto") -> PeterssonValue:
    """Delta(m, n) = [m == n] + sigma(m, n)."""
    sig = sigma_off(m, n, params, policy, reading)
    return PeterssonValue(float(m == n) + sig.value, sig.tail_bound, sig.terms_used, sig.certified, sig.cutoff)


# ---------------------------------------------------------------- trivial-character route


def trivial_character_sum(
    params: FamilyParams,
    ns: Sequence[int],
    bases: Sequence[int],
    weights: Sequence[float],
    U: int,
    workers: int = 1,
) -> tuple[complex, int]:
    """Pre-kappa sum over s*t <= U of (2 pi mu(t)/(qst phi(t))) V(0,1;t) sum_{(b_i,t)=1} w_i e((n_i+1)/qst) J_{k-1}(4 pi sqrt(n_i)/qst).

    ``bases`` carries the prime under each n_i; coprimality is tested on it.
    """
    q, k = params.q, params.k
    ns = np.asarray(ns, dtype=np.int64)
    bases = np.asarray(bases, dtype=np.int64)
    w = np.asarray(weights, dtype=float)
    if ns.size == 0:
        return 0.0 + 0.0j, 0
    root_n = np.sqrt(ns.astype(float))

    def row(t: int, S: int):
        mu = mobius(t)
        if mu == 0:
            return None
        keep = np.gcd(bases, t) == 1
        if not np.any(keep):
            return None
        v0 = v_rows(q, t, S, np.zeros(1, dtype=np.int64))[:, 0]
        den = q * t * np.arange(1, S + 1, dtype=np.int64)
        x = 4.0 * math.pi * root_n[keep][None, :] / den[:, None]
        inner = (_phase_factor(ns[keep][None, :] + 1, den[:, None]) * bessel_j(k - 1, x)) @ w[keep]
        return np.sum((2.0 * math.pi * mu / (den * euler_phi(t))) * v0 * inner)

    return lattice_sum(U, row, workers=workers)


def trivial_character_tail(params: FamilyParams, ns, weights, U: float) -> float:
    """|V(0,1;t)|/phi(t) <= 1, so the tail decays like (st)^{-k}."""
    q, k = params.q, params.k
    tot = math.fsum(abs(float(wi)) * bessel_envelope_constant(q, k, float(ni)) for ni, wi in zip(ns, weights))
    return 2.0 * tot * lattice_tail(U, k, k)
