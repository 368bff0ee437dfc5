"""Prime side of the one-level density for the Gamma_1(q) family.

Every family average is taken through Delta(m, n) = delta(m, n) + sigma(m, n),
so the prime sums become (s, t) lattice sums. All lattice pieces of one report
share a single cutoff U, which makes the finite identities
    S1 + S2 = M_off   and   M_off + eps_off = S_N
hold to rounding at that U; the reported tails bound the distance to the
untruncated values.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .arith import MAX_MODULUS, euler_phi, is_prime, primes_below, unit_structure, von_mangoldt
from .errors import BudgetExceeded, OutOfRange, TailNotCertified
from .family import (
    FamilyParams,
    PeterssonValue,
    TruncationPolicy,
    _phase_factor,
    bessel_envelope_constant,
    certified_cutoff,
    kappa,
    lattice_sum,
    lattice_tail,
    sigma_off,
    trivial_character_sum,
    trivial_character_tail,
    v_rows,
    weighted_sigma_sum,
    weighted_sigma_tail,
)
from .special import bessel_j
from .testfn import TestFunctionPair

MAX_PRIME_BOUND = 20_000_000
DELTA_SUPPORT_LIMIT = 8.0 / 3.0
UNRESOLVED_REMAINDER = "explicit-formula remainder O_k(1/log q) not computed (needs the zero side)"


def _log_q(params: FamilyParams) -> float:
    return math.log(params.q)


def a_coeff(n: int, q: int, pair: TestFunctionPair) -> float:
    """Lambda(n)/sqrt(n) * phi_hat(log n/log q); exactly 0 off prime powers and for n >= q^delta."""
    if n < 1 or q < 3:
        raise ValueError("need n >= 1 and q >= 3")
    lam = von_mangoldt(n)
    if lam == 0.0:
        return 0.0
    return lam / math.sqrt(n) * float(pair.phi_hat(math.log(n) / math.log(q)))


def support_primes(q: int, pair: TestFunctionPair, power: int = 1) -> list[int]:
    """Primes p with p^power < q^delta (the only ones phi_hat can see)."""
    bound = q ** (pair.delta / power)
    if bound > MAX_PRIME_BOUND:
        raise OutOfRange(f"prime range q^(delta/{power}) = {bound:.3g} exceeds {MAX_PRIME_BOUND}")
    return [p for p in primes_below(bound) if pair.phi_hat(power * math.log(p) / math.log(q)) != 0.0]


def _prime_weights(params: FamilyParams, pair: TestFunctionPair) -> tuple[np.ndarray, np.ndarray]:
    ps = np.array(support_primes(params.q, pair), dtype=np.int64)
    w = np.array([a_coeff(int(p), params.q, pair) for p in ps], dtype=float) / _log_q(params)
    return ps, w


# ---------------------------------------------------------------- cutoff


@dataclass(frozen=True)
class LatticePlan:
    """Common cutoff for all lattice pieces of one density run."""

    cutoff: int
    tail_sn: float
    tail_s1: float
    certified: bool


def plan_cutoff(params: FamilyParams, pair: TestFunctionPair, policy: TruncationPolicy) -> LatticePlan:
    ps, w = _prime_weights(params, pair)
    if ps.size == 0:
        return LatticePlan(1, 0.0, 0.0, True)
    U, tail, ok = certified_cutoff(lambda u: weighted_sigma_tail(params, ps, w, u), policy, "S_N")
    if U > MAX_MODULUS:
        raise BudgetExceeded(f"cutoff {U} exceeds modulus budget {MAX_MODULUS}")
    return LatticePlan(U, tail, trivial_character_tail(params, ps, w, U), ok)


def _value(raw: complex, params: FamilyParams, tail: float, pairs: int, plan: LatticePlan) -> PeterssonValue:
    return PeterssonValue(kappa(params.k, raw), tail, pairs, plan.certified, plan.cutoff)


# ---------------------------------------------------------------- S_N, M_off, eps_off


def s_n_direct(params: FamilyParams, pair: TestFunctionPair, policy: TruncationPolicy | None = None,
               plan: LatticePlan | None = None) -> PeterssonValue:
    """S_N = (1/log q) sum_p a_p sigma(p, 1), all primes in one lattice pass."""
    policy = policy or TruncationPolicy()
    plan = plan or plan_cutoff(params, pair, policy)
    ps, w = _prime_weights(params, pair)
    raw, pairs = weighted_sigma_sum(params, ps, w, plan.cutoff, workers=policy.workers)
    return _value(raw, params, plan.tail_sn, pairs, plan)


def eps_off_lifted(params: FamilyParams, pair: TestFunctionPair, plan: LatticePlan,
                   workers: int = 1) -> complex:
    """Pre-kappa eps_off via t = t' p: sum_p w_p sum over s t' p <= U of the sigma(p,1) term at modulus t' p."""
    q, k = params.q, params.k
    ps, w = _prime_weights(params, pair)
    total = 0.0 + 0.0j
    parts = []
    for p, wp in zip(ps, w):
        p = int(p)
        Up = plan.cutoff // p
        if Up < 1:
            continue
        mm = np.array([p], dtype=np.int64)

        def row(tp: int, S: int, p=p, mm=mm):
            t = tp * p
            V = v_rows(q, t, S, mm)[:, 0]
            den = q * t * np.arange(1, S + 1, dtype=np.int64)
            x = 4.0 * math.pi * math.sqrt(p) / den
            return np.sum((2.0 * math.pi / den) * V * _phase_factor(p + 1, den) * bessel_j(k - 1, x))

        raw, _ = lattice_sum(Up, row, workers=workers)
        parts.append(wp * raw)
    if parts:
        total = complex(math.fsum(z.real for z in parts), math.fsum(z.imag for z in parts))
    return total


def eps_off_tail(params: FamilyParams, pair: TestFunctionPair, U: int) -> float:
    """Tail of eps_off beyond s t' p <= U: the p | t terms carry an extra p^{1-k}."""
    ps, w = _prime_weights(params, pair)
    k = params.k
    return 2.0 * math.fsum(
        abs(float(wp)) * bessel_envelope_constant(params.q, k, float(p)) * float(p) ** (1 - k)
        * lattice_tail(U / float(p), k, k - 1)
        for p, wp in zip(ps, w)
    )


@dataclass(frozen=True)
class OffDiagonalSplit:
    s_n: float
    m_off: float           # S_N - eps_off
    m_off_restricted: float  # direct sum over (p, t) = 1
    eps_off: float
    tail: float
    eps_tail: float
    cutoff: int
    certified: bool


def m_off_eps_split(params: FamilyParams, pair: TestFunctionPair, policy: TruncationPolicy | None = None,
                    plan: LatticePlan | None = None) -> OffDiagonalSplit:
    """M_off two ways (S_N - eps_off, and the coprime-restricted sum) with eps_off from the t -> tp lift."""
    policy = policy or TruncationPolicy()
    plan = plan or plan_cutoff(params, pair, policy)
    ps, w = _prime_weights(params, pair)
    sn = s_n_direct(params, pair, policy, plan)
    eps = kappa(params.k, eps_off_lifted(params, pair, plan, policy.workers))
    raw_b, _ = weighted_sigma_sum(
        params, ps, w, plan.cutoff, restrict="coprime", method="direct", workers=policy.workers
    )
    return OffDiagonalSplit(sn.value, sn.value - eps, kappa(params.k, raw_b), eps, plan.tail_sn,
                            eps_off_tail(params, pair, plan.cutoff), plan.cutoff, plan.certified)


# ---------------------------------------------------------------- S1, S2


def s1_trivial_character(params: FamilyParams, pair: TestFunctionPair, policy: TruncationPolicy | None = None,
                         plan: LatticePlan | None = None) -> PeterssonValue:
    """Trivial-character part of M_off, through mu(t) V(0,1;t)/phi(t)."""
    policy = policy or TruncationPolicy()
    plan = plan or plan_cutoff(params, pair, policy)
    ps, w = _prime_weights(params, pair)
    raw, pairs = trivial_character_sum(params, ps, ps, w, plan.cutoff, workers=policy.workers)
    return _value(raw, params, plan.tail_s1, pairs, plan)


def s2_nontrivial_characters(params: FamilyParams, pair: TestFunctionPair, policy: TruncationPolicy | None = None,
                             plan: LatticePlan | None = None) -> PeterssonValue:
    """Non-trivial-character part of M_off: sum over chi != chi_0 of A_chi(s,t) B_chi(s,t).

    A_chi = sum over units m of V(m,1;t) conj(chi(m)); B_chi = sum over (p,t) = 1 of
    chi(p) a_p e((p+1)/qst) J_{k-1}(4 pi sqrt(p)/qst), both through the unit-group FFT.
    """
    policy = policy or TruncationPolicy()
    plan = plan or plan_cutoff(params, pair, policy)
    if plan.cutoff > MAX_MODULUS:
        raise BudgetExceeded(f"modulus {plan.cutoff} exceeds {MAX_MODULUS}")
    q, k = params.q, params.k
    ps, w = _prime_weights(params, pair)
    if ps.size == 0:
        return PeterssonValue(0.0, 0.0, 0, True, plan.cutoff)
    root_p = np.sqrt(ps.astype(float))

    def row(t: int, S: int):
        if euler_phi(t) < 2:
            return None  # t = 1, 2: only the trivial character
        keep = np.gcd(ps, t) == 1
        if not np.any(keep):
            return None
        us = unit_structure(t)
        V = v_rows(q, t, S, np.arange(t, dtype=np.int64), method="fft")  # (S, t)
        A = us.transform(V.T)  # (phi(t), S)
        den = q * t * np.arange(1, S + 1, dtype=np.int64)
        x = 4.0 * math.pi * root_p[keep][None, :] / den[:, None]
        g = w[keep][None, :] * _phase_factor(ps[keep][None, :] + 1, den[:, None]) * bessel_j(k - 1, x)
        G = np.zeros((t, S), dtype=complex)
        np.add.at(G, ps[keep] % t, g.T)
        B = us.cotransform(G)
        inner = np.sum(A[1:] * B[1:], axis=0)
        return np.sum((2.0 * math.pi / (den * euler_phi(t))) * inner)

    raw, pairs = lattice_sum(plan.cutoff, row, workers=policy.workers)
    return _value(raw, params, plan.tail_sn + plan.tail_s1, pairs, plan)


# ---------------------------------------------------------------- squares and higher powers


def residue_indicator(p: int, q: int) -> int:
    """[p = 1 mod q] - [p = -1 mod q]: the odd-character average of chi(p)."""
    r = p % q
    return int(r == 1 % q) - int(r == (q - 1))


def kappa_n_default(q: int) -> float:
    return 10.0 * q**-1.5


def s_sq_term(params: FamilyParams, pair: TestFunctionPair, policy: TruncationPolicy | None = None,
              kappa_n: float | None = None) -> tuple[PeterssonValue, float]:
    """(value, chi_budget) for -(1/log q) sum_p (log p/p) phi_hat(2 log p/log q) [Delta(p^2,1) - T(p)]."""
    policy = policy or TruncationPolicy()
    q = params.q
    kappa_n = kappa_n_default(q) if kappa_n is None else kappa_n
    ps = np.array(support_primes(q, pair, power=2), dtype=np.int64)
    if ps.size == 0:
        return PeterssonValue(0.0, 0.0, 0, True, 0), 0.0
    lq = _log_q(params)
    hat = np.array([float(pair.phi_hat(2.0 * math.log(p) / lq)) for p in ps])
    base = np.log(ps.astype(float)) / ps * hat  # (log p/p) phi_hat
    w = -base / lq
    sq = ps * ps
    U, tail, ok = certified_cutoff(lambda u: weighted_sigma_tail(params, sq, w, u), policy, "S_sq")
    raw, pairs = weighted_sigma_sum(params, sq, w, U, workers=policy.workers)
    indicator = math.fsum(float(wi) * -residue_indicator(int(p), q) for wi, p in zip(w, ps))
    value = kappa(params.k, raw) + indicator
    chi_budget = math.fsum(abs(float(b)) for b in base) * kappa_n
    return PeterssonValue(value, tail, pairs, ok, U), chi_budget


def _higher_powers(q: int, pair: TestFunctionPair, min_exp: int) -> list[tuple[int, int, int]]:
    """(p, b, p^b) with b >= min_exp and p^b < q^delta, phi_hat nonzero."""
    bound = q**pair.delta
    out = []
    for p in primes_below(bound ** (1.0 / min_exp)):
        b, n = min_exp, p**min_exp
        while n < bound:
            if pair.phi_hat(math.log(n) / math.log(q)) != 0.0:
                out.append((p, b, n))
            b += 1
            n *= p
    return out


def higher_power_budget(params: FamilyParams, pair: TestFunctionPair) -> float:
    """(1/log q) sum over b >= 3, p^b < q^delta of 2 log p/p^{b/2} |phi_hat(b log p/log q)|."""
    lq = _log_q(params)
    terms = [
        2.0 * math.log(p) / p ** (b / 2.0) * abs(float(pair.phi_hat(math.log(n) / lq)))
        for p, b, n in _higher_powers(params.q, pair, 3)
    ]
    return math.fsum(terms) / lq


def eps_higher_power_diag(params: FamilyParams, pair: TestFunctionPair,
                          policy: TruncationPolicy | None = None) -> PeterssonValue:
    """kappa of sum_{s,t} (2 pi mu(t)/(qst phi(t))) V(0,1;t) sum over p^j (j >= 2, (p,t) = 1) of
    a_{p^j} e((p^j+1)/qst) J_{k-1}(4 pi sqrt(p^j)/qst)."""
    policy = policy or TruncationPolicy()
    pw = _higher_powers(params.q, pair, 2)
    if not pw:
        return PeterssonValue(0.0, 0.0, 0, True, 0)
    ns = [n for _, _, n in pw]
    bases = [p for p, _, _ in pw]
    w = [a_coeff(n, params.q, pair) for n in ns]
    U, tail, ok = certified_cutoff(lambda u: trivial_character_tail(params, ns, w, u), policy, "eps_higher_power")
    raw, pairs = trivial_character_sum(params, ns, bases, w, U, workers=policy.workers)
    return PeterssonValue(kappa(params.k, raw), tail, pairs, ok, U)


# ---------------------------------------------------------------- report


@dataclass
class DensityReport:
    q: int
    k: int
    delta: float
    testfn: str
    main_term: float
    family_size_correction_bound: float
    p_term: float
    p2_term: float
    p2_chi_budget: float
    higher_power_budget: float
    s_n: float
    s1: float
    s2: float
    m_off: float
    m_off_restricted: float
    eps_off: float
    s_sq: float
    eps_higher_power: float
    tail_bound_total: float
    d_total: float
    cutoff: int
    certified: bool
    q_is_prime: bool
    warnings: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)

    @property
    def reassembly_residual(self) -> float:
        return abs(self.s1 + self.s2 - self.m_off)

    @property
    def split_residual(self) -> float:
        return abs(self.m_off_restricted + self.eps_off - self.s_n)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reassembly_residual"] = self.reassembly_residual
        d["split_residual"] = self.split_residual
        return d


def one_level_density(params: FamilyParams, pair: TestFunctionPair,
                      policy: TruncationPolicy | None = None) -> DensityReport:
    """d_total = integral_phi - 2 S_N + 2 S_sq, with every budget itemized."""
    policy = policy or TruncationPolicy()
    notes = []
    if not is_prime(params.q):
        notes.append(f"q = {params.q} is not prime")
    if pair.delta > DELTA_SUPPORT_LIMIT:
        notes.append(f"delta = {pair.delta:g} exceeds 8/3")
    for msg in notes:
        warnings.warn(msg, stacklevel=2)

    plan = plan_cutoff(params, pair, policy)
    split = m_off_eps_split(params, pair, policy, plan)
    s1 = s1_trivial_character(params, pair, policy, plan)
    s2 = s2_nontrivial_characters(params, pair, policy, plan)
    sq, chi_budget = s_sq_term(params, pair, policy)
    hp = eps_higher_power_diag(params, pair, policy)

    # family size: the harmonic count is Delta(1,1) = 1 + sigma(1,1)
    fam = sigma_off(1, 1, params, TruncationPolicy(tail_eps=policy.tail_eps, st_cap=policy.st_cap,
                                                      deterministic=policy.deterministic,
                                                      threads=policy.threads))
    main = float(pair.integral_phi)
    fam_bound = (abs(fam.value) + fam.tail_bound) * abs(main)

    # signed contributions: d_total = main + p_term + p2_term
    p_term = -2.0 * split.s_n
    p2_term = 2.0 * sq.value
    tails = 2.0 * plan.tail_sn + 2.0 * sq.tail_bound
    certified = plan.certified and sq.certified and hp.certified and fam.certified
    if not certified and policy.strict:
        raise TailNotCertified("density run did not certify every lattice tail")
    return DensityReport(
        q=params.q, k=params.k, delta=pair.delta, testfn=pair.kind,
        main_term=main,
        family_size_correction_bound=fam_bound,
        p_term=p_term, p2_term=p2_term,
        p2_chi_budget=2.0 * chi_budget,
        higher_power_budget=2.0 * higher_power_budget(params, pair),
        s_n=split.s_n, s1=s1.value, s2=s2.value,
        m_off=split.m_off, m_off_restricted=split.m_off_restricted, eps_off=split.eps_off,
        s_sq=sq.value, eps_higher_power=hp.value,
        tail_bound_total=tails,
        d_total=main + p_term + p2_term,
        cutoff=plan.cutoff, certified=certified, q_is_prime=is_prime(params.q),
        warnings=notes, unresolved=[UNRESOLVED_REMAINDER],
    )
