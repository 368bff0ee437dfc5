"""Decay regressions, dyadic block diagnostics, a character prime-sum probe and kernel arithmetic."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .arith import euler_phi, primes_below, unit_structure
from .density import a_coeff
from .errors import DegenerateRegression, OutOfRange
from .family import (
    FamilyParams,
    PeterssonValue,
    TruncationPolicy,
    _phase_factor,
    kappa,
    sigma_tail_bound,
    sigma_vector,
    v_rows,
)
from .special import bessel_j, dyadic_window
from .testfn import TestFunctionPair

# ---------------------------------------------------------------- regression


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float
    points: tuple = field(default=())

    @classmethod
    def fit(cls, points: Sequence[tuple[float, float]]) -> "RegressionResult":
        """Least squares y = slope * x + intercept on the stored points."""
        pts = tuple((float(x), float(y)) for x, y in points)
        if len(pts) < 2:
            raise DegenerateRegression("need at least two points")
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
            raise DegenerateRegression("non-finite data")
        xc = x - x.mean()
        sxx = float(xc @ xc)
        if sxx == 0.0:
            raise DegenerateRegression("all abscissae equal")
        slope = float(xc @ (y - y.mean())) / sxx
        intercept = float(y.mean() - slope * x.mean())
        resid = y - (slope * x + intercept)
        yc = y - y.mean()
        syy = float(yc @ yc)
        r2 = 1.0 if syy == 0.0 else max(0.0, 1.0 - float(resid @ resid) / syy)
        return cls(slope, intercept, r2, pts)

    def refit(self) -> "RegressionResult":
        return RegressionResult.fit(self.points)


def loglog_regression(xs: Sequence[float], ys: Sequence[float]) -> RegressionResult:
    """Regression of log|y| on log x."""
    ys = [abs(float(y)) for y in ys]
    if all(y == 0.0 for y in ys) or any(y == 0.0 for y in ys):
        raise DegenerateRegression("zero magnitudes cannot be fitted on a log scale")
    return RegressionResult.fit([(math.log(x), math.log(y)) for x, y in zip(xs, ys)])


def worst_case_slope(xs: Sequence[float], ys: Sequence[float], tails: Sequence[float]) -> float:
    """Largest log-log slope compatible with |y_i| +- tail_i (the slope is linear in log y)."""
    lx = np.log(np.asarray(xs, dtype=float))
    w = lx - lx.mean()
    hi = np.abs(ys) + np.asarray(tails)
    lo = np.abs(ys) - np.asarray(tails)
    if np.any(lo[w < 0] <= 0):
        return math.inf
    ly = np.where(w > 0, np.log(hi), np.log(np.where(lo > 0, lo, 1.0)))
    return float(w @ ly / (w @ w))


def sigma_grid(params: FamilyParams, ms: Sequence[int], ns: Sequence[int],
               policy: TruncationPolicy | None = None) -> dict:
    """{(m, n): sigma(m, n)} on a small grid, one lattice pass per n at the cutoff certified for the largest mn."""
    from .family import choose_cutoff

    policy = policy or TruncationPolicy()
    mn_max = max(ms) * max(ns)
    U, _, ok = choose_cutoff(lambda u: sigma_tail_bound(params.q, params.k, mn_max, u), policy.tail_eps, policy.st_cap)
    out = {}
    for n in ns:
        raw, pairs = sigma_vector(params, list(ms), U, n=n, workers=policy.workers)
        for m, z in zip(ms, raw):
            tail = sigma_tail_bound(params.q, params.k, m * n, U)
            out[(m, n)] = PeterssonValue(kappa(params.k, z), tail, pairs, tail <= policy.tail_eps, U)
    return out


@dataclass(frozen=True)
class DecayRun:
    regression: RegressionResult
    qs: tuple
    values: tuple  # max |Delta - delta| per q
    tails: tuple
    worst_slope: float
    certified: bool


def delta_decay_regression(params_list: Sequence[FamilyParams], m, n,
                           policy: TruncationPolicy | None = None) -> DecayRun:
    """log max |Delta(m,n) - delta(m,n)| against log q; m and n may be ints or ranges."""
    if len(params_list) < 4:
        raise ValueError("need at least 4 values of q")
    ms = [m] if isinstance(m, int) else list(m)
    ns = [n] if isinstance(n, int) else list(n)
    vals, tails, cert = [], [], True
    for params in params_list:
        grid = sigma_grid(params, ms, ns, policy)
        worst = max(grid.values(), key=lambda v: abs(v.value))
        vals.append(abs(worst.value))
        tails.append(max(v.tail_bound for v in grid.values()))
        cert = cert and all(v.certified for v in grid.values())
    qs = [p.q for p in params_list]
    reg = loglog_regression(qs, vals)
    return DecayRun(reg, tuple(qs), tuple(vals), tuple(tails), worst_case_slope(qs, vals, tails), cert)


def envelope_fit(qs: Sequence[float], ys: Sequence[float]) -> RegressionResult:
    """Least squares |y| = C / log q + c0, regressed on x = 1/log q."""
    return RegressionResult.fit([(1.0 / math.log(q), abs(y)) for q, y in zip(qs, ys)])


# ---------------------------------------------------------------- block diagnostics

CASES = ("case1", "case2", "case3")


def classify_block(P: float, S: float, T: float, q: int) -> str:
    """case1: P/q <= ST; case3: ST <= sqrt(P)/q; case2 in between."""
    st = S * T
    if st >= P / q:
        return "case1"
    if st <= math.sqrt(P) / q:
        return "case3"
    return "case2"


@dataclass(frozen=True)
class BlockSpec:
    P: float
    S: float
    T: float
    q: int
    case_label: str = ""

    def __post_init__(self):
        if min(self.P, self.S, self.T) <= 0:
            raise ValueError("block centers must be positive")
        label = classify_block(self.P, self.S, self.T, self.q)
        if self.case_label and self.case_label != label:
            raise ValueError(f"case label {self.case_label} inconsistent with block (expected {label})")
        object.__setattr__(self, "case_label", label)


def block_bound(spec: BlockSpec, k: int) -> float:
    """Reference magnitude for |D| in the block's case (q^eps factors dropped)."""
    P, S, T, q = spec.P, spec.S, spec.T, spec.q
    if spec.case_label == "case1":
        return math.sqrt(P) / (q * q * S) * (math.sqrt(P) / (q * S * T)) ** (k - 2)
    return P**0.75 / (q * q * S)


def _window_range(center: float) -> range:
    lo, hi = 0.75 * center, 2.0 * center
    return range(max(1, math.floor(lo) + 1), math.ceil(hi))


def _block_sum(params: FamilyParams, pair: TestFunctionPair, s_range, s_weight, t_range, t_weight,
               p_weight, p_max: float) -> complex:
    q, k = params.q, params.k
    ps = np.array([p for p in primes_below(min(p_max, q**pair.delta))], dtype=np.int64)
    if ps.size == 0:
        return 0.0 + 0.0j
    pw = np.asarray(p_weight(ps.astype(float)), dtype=float)
    a = np.array([a_coeff(int(p), q, pair) for p in ps]) * pw
    live = a != 0.0
    ps, a = ps[live], a[live]
    if ps.size == 0:
        return 0.0 + 0.0j
    s_vals = np.array(list(s_range), dtype=np.int64)
    sw = np.asarray(s_weight(s_vals.astype(float)), dtype=float)
    total = 0.0 + 0.0j
    for t in t_range:
        tw = float(t_weight(float(t)))
        if tw == 0.0 or euler_phi(t) < 2 or s_vals.size == 0:
            continue
        keep = np.gcd(ps, t) == 1
        if not np.any(keep):
            continue
        us = unit_structure(t)
        S = int(s_vals.max())
        V = v_rows(q, t, S, np.arange(t, dtype=np.int64), method="fft")[s_vals - 1]  # (ns, t)
        A = us.transform(V.T)
        den = q * t * s_vals
        x = 4.0 * math.pi * np.sqrt(ps[keep].astype(float))[None, :] / den[:, None]
        g = a[keep][None, :] * _phase_factor(ps[keep][None, :] + 1, den[:, None]) * bessel_j(k - 1, x)
        G = np.zeros((t, s_vals.size), dtype=complex)
        np.add.at(G, ps[keep] % t, g.T)
        B = us.cotransform(G)
        inner = np.sum(A[1:] * B[1:], axis=0)
        total += complex(np.sum(sw * tw * inner / (den * euler_phi(t))))
    return total


def block_D(params: FamilyParams, pair: TestFunctionPair, spec: BlockSpec,
            policy: TruncationPolicy | None = None) -> complex:
    """Windowed block sum over s ~ S, t ~ T, p ~ P of the non-trivial-character part.

    Weight 1/(qst phi(t)) and no kappa: compare magnitudes up to 2 pi and a factor 2.
    """
    if spec.P >= params.q**pair.delta:
        raise OutOfRange(f"P = {spec.P:g} is not below q^delta = {params.q ** pair.delta:g}")
    return _block_sum(
        params, pair,
        _window_range(spec.S), lambda s: dyadic_window(s / spec.S),
        _window_range(spec.T), lambda t: dyadic_window(t / spec.T),
        lambda p: dyadic_window(p / spec.P), 2.0 * spec.P,
    )


def block_D_unwindowed_p(params: FamilyParams, pair: TestFunctionPair, S: float, T: float) -> complex:
    """Same as block_D with the p-window removed (all primes below q^delta)."""
    return _block_sum(
        params, pair,
        _window_range(S), lambda s: dyadic_window(s / S),
        _window_range(T), lambda t: dyadic_window(t / T),
        lambda p: np.ones_like(p), math.inf,
    )


def dyadic_p_grid(params: FamilyParams, pair: TestFunctionPair) -> list[float]:
    """P = 2^j covering every prime below q^delta."""
    edge = params.q**pair.delta
    return [2.0**j for j in range(0, max(1, math.ceil(math.log2(edge))) + 1)]


# ---------------------------------------------------------------- character prime-sum probe


@dataclass(frozen=True)
class ProbeResult:
    value: complex
    comparison: float  # log^2(t + |Im z|)
    trivial_character: bool
    terms: int


def char_prime_sum_probe(t: int, character_index: int, z: complex, X: float, window=None) -> ProbeResult:
    """sum_p chi(p) log p psi(p/X) / p^z, psi the dyadic window unless given; observational only."""
    if t < 3:
        raise OutOfRange("modulus must be >= 3")
    z = complex(z)
    band = 10.0 / math.log(t)
    if abs(z.real - 0.5) >= band:
        raise OutOfRange(f"Re z = {z.real} outside (1/2 - {band:.3g}, 1/2 + {band:.3g})")
    us = unit_structure(t)
    if not 0 <= character_index < us.size:
        raise OutOfRange(f"character index must lie in [0, {us.size})")
    psi = window or dyadic_window
    ps = np.array(primes_below(2.0 * X + 1.0), dtype=np.int64)
    wts = np.asarray(psi(ps / float(X)), dtype=float) if ps.size else np.zeros(0)
    live = (wts != 0.0) & (np.gcd(ps, t) == 1) if ps.size else np.zeros(0, dtype=bool)
    ps, wts = ps[live], wts[live]
    if ps.size == 0:
        return ProbeResult(0.0 + 0.0j, math.log(t + abs(z.imag)) ** 2, character_index == 0, 0)
    lp = np.log(ps.astype(float))
    terms = lp * wts * np.exp(-z * lp)
    G = np.zeros(t, dtype=complex)
    np.add.at(G, ps % t, terms)
    val = complex(us.cotransform(G)[character_index])
    return ProbeResult(val, math.log(t + abs(z.imag)) ** 2, character_index == 0, int(ps.size))


# ---------------------------------------------------------------- kernel arithmetic


def kernel_value(delta: float, x: float) -> float:
    """sin(delta pi x)/(pi x), equal to delta at x = 0."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if x == 0:
        return float(delta)
    if abs(delta * x) < 1e-4:
        u = math.pi * delta * x
        return float(delta) * (1.0 - u * u / 6.0 + u**4 / 120.0)
    return math.sin(delta * math.pi * x) / (math.pi * x)


def nonvanishing_bound(delta) -> Fraction | float:
    """1 - 1/delta: exact Fraction for rational input, float otherwise."""
    if isinstance(delta, (int, Fraction)):
        d = Fraction(delta)
    elif isinstance(delta, str):
        d = Fraction(delta)
    else:
        d = None
    if d is not None:
        if d < 1:
            raise OutOfRange("delta must be >= 1")
        return 1 - 1 / d
    delta = float(delta)
    if delta < 1:
        raise OutOfRange("delta must be >= 1")
    return 1.0 - 1.0 / delta


def block_grid(q: int, pair: TestFunctionPair, Ps: Iterable[float], Ss: Iterable[float], Ts: Iterable[float]):
    """Split a grid into admissible BlockSpecs and (P, S, T, reason) rejections."""
    ok, rejected = [], []
    edge = q**pair.delta
    for P in Ps:
        for S in Ss:
            for T in Ts:
                if P >= edge:
                    rejected.append((P, S, T, f"P >= q^delta = {edge:.6g}"))
                else:
                    ok.append(BlockSpec(P, S, T, q))
    return ok, rejected
