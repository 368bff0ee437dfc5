"""J-Bessel evaluation, smooth dyadic windows and the oscillatory Mellin probe."""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import QuadratureFailure

# float64 power series is free of cancellation trouble below this argument
_FLOAT_SERIES_MAX = 8.0
_ASYM_TERM_CAP = 60
_SERIES_TERM_CAP = 200


# ---------------------------------------------------------------- Bessel


@dataclass(frozen=True)
class BesselEvaluator:
    """J_nu on x >= 0: power series below ``x_switch``, Hankel expansion above."""

    order: int
    x_switch: float | None = None
    series_terms: int = _SERIES_TERM_CAP

    def __post_init__(self):
        if self.order < 0 or int(self.order) != self.order:
            raise ValueError("order must be a nonnegative integer")
        if self.x_switch is None:
            object.__setattr__(self, "x_switch", 18.0 + 2.0 * self.order)

    # -- series branch
    def series(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        small = x <= _FLOAT_SERIES_MAX
        if small.any():
            out[small] = _series_float(self.order, x[small])
        for idx in zip(*np.nonzero(~small)):
            out[idx] = _series_extended(self.order, float(x[idx]), self.series_terms)
        return out if out.ndim else float(out)

    # -- asymptotic branch
    def asymptotic(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("asymptotic branch needs x > 0")
        out = _hankel(self.order, x)
        return out if out.ndim else float(out)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("x must be >= 0")
        out = np.empty_like(x)
        lo = x <= self.x_switch
        if lo.any():
            out[lo] = self.series(x[lo])
        if (~lo).any():
            out[~lo] = self.asymptotic(x[~lo])
        return out if out.ndim else float(out)


def _series_float(nu: int, x: np.ndarray) -> np.ndarray:
    h = 0.25 * x * x
    term = (0.5 * x) ** nu / math.factorial(nu)
    total = term.copy()
    comp = np.zeros_like(total)
    for l in range(1, 60):
        term = -term * h / (l * (l + nu))
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
        if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _series_extended(nu: int, x: float, cap: int) -> float:
    with mpmath.workdps(50):
        xm = mpmath.mpf(x)
        h = xm * xm / 4
        term = (xm / 2) ** nu / mpmath.factorial(nu)
        total = term
        for l in range(1, cap):
            term = -term * h / (l * (l + nu))
            total += term
            if abs(term) < mpmath.mpf(10) ** -40 * (abs(total) + mpmath.mpf(10) ** -300):
                break
        return float(total)


def _hankel(nu: int, x: np.ndarray) -> np.ndarray:
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    qq = np.zeros_like(x)
    coeff = 1.0
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, _ASYM_TERM_CAP):
        coeff *= (mu - (2 * k - 1) ** 2) / (k * 8.0)
        term = coeff / x**k
        mag = np.abs(term)
        # optimal truncation: stop each point once terms stop shrinking
        active &= mag < prev
        if not active.any():
            break
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            qq = np.where(active, qq + sign * term, qq)
        else:
            p = np.where(active, p + sign * term, p)
        prev = mag
        active &= mag > 1e-17
        if coeff == 0.0:
            break
    w = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(w) - qq * np.sin(w))


_EVALUATORS: dict[int, BesselEvaluator] = {}


def bessel_j(nu: int, x):
    """J_nu(x) for integer nu >= 0 and x >= 0 (scalar or array)."""
    ev = _EVALUATORS.get(nu)
    if ev is None:
        ev = _EVALUATORS.setdefault(nu, BesselEvaluator(nu))
    return ev(x)


def bessel_series_envelope(nu: int, x):
    """(x/2)^nu / nu!, the leading series term and a bound on |J_nu(x)| for real x."""
    return (0.5 * np.asarray(x, dtype=float)) ** nu / math.factorial(nu)


def bessel_bound_margin(nu: int, x, evaluator: BesselEvaluator | None = None):
    """|J_nu(x)| / min(x^{-1/2}, (x/2)^nu / nu!)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be > 0")
    ev = evaluator or BesselEvaluator(nu)
    ref = np.minimum(x**-0.5, bessel_series_envelope(nu, x))
    out = np.abs(ev(x)) / ref
    return out if out.ndim else float(out)


# ---------------------------------------------------------------- smooth windows


def _g(u):
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)


def smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, and B(u) + B(1-u) = 1."""
    u = np.asarray(u, dtype=float)
    a = _g(u)
    b = _g(1.0 - u)
    return a / (a + b)


def plateau_window(x, rise_start, rise_end, fall_start, fall_end):
    """Smooth window: 0 outside (rise_start, fall_end), 1 on [rise_end, fall_start]."""
    x = np.asarray(x, dtype=float)
    up = smooth_step((x - rise_start) / (rise_end - rise_start))
    down = smooth_step((fall_end - x) / (fall_end - fall_start))
    out = np.where(x < rise_end, up, np.where(x > fall_start, down, 1.0))
    return out if out.ndim else float(out)


class DyadicWindow:
    """W in C_c^inf([3/4, 2]), W = 1 on [1, 3/2], W(x) + W(x/2) = 1 on [1, 3]."""

    support = (0.75, 2.0)
    plateau = (1.0, 1.5)

    def __call__(self, x):
        return plateau_window(x, 0.75, 1.0, 1.5, 2.0)


dyadic_window = DyadicWindow()


def dyadic_partition_sum(x: float) -> float:
    """sum over R = 2^j, j >= 0, of W(x/R)."""
    if x < 1:
        raise ValueError("partition of unity holds for x >= 1")
    j_mid = max(0, int(math.floor(math.log2(x))))
    total = 0.0
    for j in range(max(0, j_mid - 2), j_mid + 3):
        total += float(dyadic_window(x / 2.0**j))
    return total


def dyadic_partition_residual(x: float) -> float:
    return abs(dyadic_partition_sum(x) - 1.0)


def mellin_eta(y):
    """The fixed Mellin weight: 1 on [1, 2], supported in (1/2, 4)."""
    return plateau_window(y, 0.5, 1.0, 2.0, 4.0)


# ---------------------------------------------------------------- Mellin probe

_GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
_ETA_LO, _ETA_HI = 0.5, 4.0


@dataclass(frozen=True)
class MellinProbe:
    X: float
    j: float = 1.0
    alpha: float = 0.0
    sign: int = 1
    c: float = 1.0
    panels: int | None = None  # initial composite panel count; None picks from the phase
    scheme: str = "gauss-legendre-16-composite"
    tol: float = 1e-11
    max_panels: int = 1 << 22

    def __post_init__(self):
        if self.X < 1 or self.j < 1:
            raise ValueError("X and j must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def ratio(self) -> float:
        return self.X / self.j


@dataclass(frozen=True)
class MellinValue:
    value: complex
    error: float
    panels: int


def _phase_variation(probe: MellinProbe, v: float) -> float:
    """Upper bound on the number of oscillations of the integrand over the support."""
    lin = probe.ratio * (_ETA_HI - _ETA_LO)
    sq = probe.alpha * math.sqrt(probe.X) / probe.j * (math.sqrt(_ETA_HI) - math.sqrt(_ETA_LO))
    lg = abs(v) / (2 * math.pi) * math.log(_ETA_HI / _ETA_LO)
    return lin + sq + lg


def _mellin_rule(probe: MellinProbe, v: float, panels: int, chunk: int = 1 << 15) -> complex:
    edges = np.linspace(_ETA_LO, _ETA_HI, panels + 1)
    total = 0.0 + 0.0j
    for lo in range(0, panels, chunk):
        e = edges[lo : min(panels, lo + chunk) + 1]
        half = 0.5 * (e[1:] - e[:-1])
        mid = 0.5 * (e[1:] + e[:-1])
        y = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
        w = (half[:, None] * _GL_W[None, :]).ravel()
        phase = y * probe.ratio + probe.sign * probe.alpha * np.sqrt(y * probe.X) / probe.j
        ang = 2 * math.pi * np.mod(phase, 1.0) + v * np.log(y)
        f = mellin_eta(y) * y ** (probe.c - 1.0) * np.exp(1j * ang)
        total += complex(np.sum(w * f))
    return total


def mellin_M1(probe: MellinProbe, v: float) -> MellinValue:
    """Integral of eta(y) e(yX/j) e(+-alpha sqrt(yX)/j) y^{s-1} dy at s = c + iv.

    Composite Gauss-Legendre with panel doubling until two successive rules agree
    to ``probe.tol``; the difference is returned as the error estimate.
    """
    panels = probe.panels or max(32, int(math.ceil(2 * _phase_variation(probe, v))))
    if 2 * panels > probe.max_panels:
        raise QuadratureFailure(f"Mellin quadrature at v={v} needs more than {probe.max_panels} panels")
    prev = _mellin_rule(probe, v, panels)
    while True:
        panels *= 2
        if panels > probe.max_panels:
            raise QuadratureFailure(f"Mellin quadrature did not converge at v={v}")
        cur = _mellin_rule(probe, v, panels)
        err = abs(cur - prev)
        if err <= probe.tol:
            return MellinValue(cur, err, panels)
        prev = cur


def _stationary_values(probe: MellinProbe) -> np.ndarray:
    y = np.linspace(_ETA_LO, _ETA_HI, 4001)
    return -2 * math.pi * (y * probe.ratio + probe.sign * probe.alpha * np.sqrt(y * probe.X) / (2 * probe.j))


def stationary_band(probe: MellinProbe) -> tuple[float, float]:
    """(min |v|, max |v|) over v for which the phase has a stationary point in the support."""
    v = _stationary_values(probe)
    a = np.abs(v)
    if np.any(v > 0) and np.any(v < 0):
        return 0.0, float(a.max())
    return float(a.min()), float(a.max())


def stationary_side(probe: MellinProbe) -> int:
    """Sign of v at stationary points: -1 or +1, or 0 when the band straddles v = 0."""
    v = _stationary_values(probe)
    if np.all(v < 0):
        return -1
    if np.all(v > 0):
        return 1
    return 0


def fitted_band_constants(probe: MellinProbe, lower_margin=0.5, upper_margin=2.0) -> tuple[float, float]:
    """(d1, c1) so that the saddle band is d1 X/j <= |v| <= c1 X/j on the stationary side."""
    lo, hi = stationary_band(probe)
    return lower_margin * lo / probe.ratio, upper_margin * hi / probe.ratio


def in_saddle_band(probe: MellinProbe, v: float, d1: float, c1: float) -> bool:
    side = stationary_side(probe)
    if side and v * side <= 0:
        return False
    return d1 * probe.ratio <= abs(v) <= c1 * probe.ratio


@dataclass(frozen=True)
class MellinScanRow:
    v: float
    abs_M1: float
    regime: str
    bound_ratio: float
    error: float


def mellin_regime_scan(probe: MellinProbe, v_grid, decay_power: float = 2.0) -> list[MellinScanRow]:
    """Evaluate |M1| on ``v_grid`` and label each v as saddle-band or decay.

    bound_ratio is |M1| / sqrt(j/X) in the saddle band and
    |M1| * (|v| + X/j)^decay_power in the decay regime.
    """
    d1, c1 = fitted_band_constants(probe)
    rows = []
    r = probe.ratio
    for v in v_grid:
        v = float(v)
        mv = mellin_M1(probe, v)
        mag = abs(mv.value)
        if in_saddle_band(probe, v, d1, c1):
            regime = "saddle"
            ratio = mag / math.sqrt(1.0 / r)
        else:
            regime = "decay"
            ratio = mag * (abs(v) + r) ** decay_power
        rows.append(MellinScanRow(v, mag, regime, ratio, mv.error))
    return rows
