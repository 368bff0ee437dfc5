"""Even test functions phi with compactly supported Fourier transform.

Convention: phi_hat(u) = integral of phi(x) e^{-2 pi i x u} dx, so
integral_phi = phi_hat(0) and phi(x) = integral of phi_hat(u) cos(2 pi u x) du.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure

_GL_NODES = 64
_GL_PANELS = 64


@dataclass(frozen=True)
class TestFunctionPair:
    delta: float
    phi: Callable = field(repr=False)
    phi_hat: Callable = field(repr=False)
    integral_phi: float
    kind: str

    __test__ = False  # not a pytest class

    def support_edge(self, q: float) -> float:
        """q^delta: n contributes only when n < q^delta."""
        return q**self.delta


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not (delta > 0) or not math.isfinite(delta):
        raise ValueError(f"delta must be a positive real, got {delta}")
    return delta


def _supported(delta: float, profile: Callable) -> Callable:
    def phi_hat(u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        out = np.zeros_like(a)
        inside = a < delta
        if inside.any():
            out[inside] = profile(a[inside])
        return out if out.ndim else float(out)

    return phi_hat


def fejer_pair(delta: float) -> TestFunctionPair:
    """phi_hat = triangle of half-width delta, phi = delta * sinc^2(delta x)."""
    delta = _check_delta(delta)

    def phi(x):
        x = np.asarray(x, dtype=float)
        out = delta * np.sinc(delta * x) ** 2
        return out if out.ndim else float(out)

    return TestFunctionPair(delta, phi, _supported(delta, lambda a: 1.0 - a / delta), 1.0, "fejer")


def _bump_profile(v):
    """exp(-1/(1 - v^2)) * e on |v| < 1, equal to 1 at v = 0."""
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(np.abs(v) < 1.0, np.exp(1.0 - 1.0 / (1.0 - v * v)), 0.0)


def bump_pair(delta: float) -> TestFunctionPair:
    """C-infinity bump phi_hat on (-delta, delta) with phi_hat(0) = 1; phi by cosine quadrature."""
    delta = _check_delta(delta)
    x_gl, w_gl = np.polynomial.legendre.leggauss(_GL_NODES)
    edges = np.linspace(0.0, delta, _GL_PANELS + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x_gl[None, :]).ravel()
    weights = (half[:, None] * w_gl[None, :]).ravel()
    prof = _bump_profile(nodes / delta) * weights
    prof.setflags(write=False)
    nodes.setflags(write=False)

    # sanity: quadrature of the profile against an adaptive oracle
    ref, _ = integrate.quad(lambda u: float(_bump_profile(u / delta)), 0.0, delta, epsabs=1e-14, epsrel=1e-13)
    if abs(prof.sum() - ref) > 1e-11 * max(1.0, abs(ref)):
        raise QuadratureFailure(f"bump quadrature disagrees with oracle: {prof.sum()} vs {ref}")

    def phi(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        out = np.empty_like(flat)
        for i in range(0, flat.size, 256):
            blk = flat[i : i + 256]
            out[i : i + 256] = 2.0 * (np.cos(2.0 * np.pi * blk[:, None] * nodes[None, :]) @ prof)
        out = out.reshape(x.shape)
        return out if out.ndim else float(out)

    return TestFunctionPair(delta, phi, _supported(delta, lambda a: _bump_profile(a / delta)), 1.0, "bump")


def make_pair(kind: str, delta: float) -> TestFunctionPair:
    if kind == "fejer":
        return fejer_pair(delta)
    if kind == "bump":
        return bump_pair(delta)
    raise ValueError(f"unknown test function {kind!r}")


SELFCHECK_GRID = np.arange(-32, 33) * 0.25


def fourier_inversion(pair: TestFunctionPair, x: float) -> float:
    """integral over (-delta, delta) of phi_hat(u) cos(2 pi u x), by adaptive quadrature."""
    f = lambda u: pair.phi_hat(u) * math.cos(2.0 * math.pi * u * x)
    val, _ = integrate.quad(f, 0.0, pair.delta, epsabs=1e-13, epsrel=1e-12, limit=400)
    return 2.0 * val


def pair_selfcheck(pair: TestFunctionPair, grid=None) -> float:
    """max |inversion quadrature - phi(x)| over the grid (default 0, +-0.25, ..., +-8)."""
    grid = SELFCHECK_GRID if grid is None else np.asarray(grid, dtype=float)
    phis = np.asarray(pair.phi(grid), dtype=float)
    return max(abs(fourier_inversion(pair, float(x)) - float(p)) for x, p in zip(grid, phis))


def symmetry_residual(pair: TestFunctionPair, grid=None) -> float:
    """max over a symmetric grid of |phi(x) - phi(-x)| and |phi_hat(u) - phi_hat(-u)|."""
    grid = SELFCHECK_GRID if grid is None else np.asarray(grid, dtype=float)
    a = np.abs(np.asarray(pair.phi(grid)) - np.asarray(pair.phi(-grid)))
    b = np.abs(np.asarray(pair.phi_hat(grid)) - np.asarray(pair.phi_hat(-grid)))
    return float(max(a.max(), b.max()))


def decay_radius(pair: TestFunctionPair, level: float = 1e-6, x_max: float = 200.0) -> float:
    """Smallest sampled X0 with |phi(x)| < level on [X0, x_max]; inf if still above near x_max."""
    xs = np.linspace(0.0, x_max, 8001)
    vals = np.abs(np.asarray(pair.phi(xs)))
    above = np.flatnonzero(vals >= level)
    if not above.size:
        return 0.0
    if above[-1] >= xs.size - 400:
        return math.inf
    return float(xs[above[-1] + 1])
