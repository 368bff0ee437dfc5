"""Pure numpy implementations of the compiled kernels (same signatures)."""
from __future__ import annotations


import numpy as np


def inverse_table(t: int) -> np.ndarray:
    out = np.full(t, -1, dtype=np.int64)
    if t == 1:
        out[0] = 0
        return out
    x = np.arange(t, dtype=np.int64)
    units = np.flatnonzero(np.gcd(x, t) == 1)
    out[units] = [pow(int(u), -1, t) for u in units]
    return out


def _admissible(t: int, A: int, inv: np.ndarray):
    x = np.arange(t, dtype=np.int64)
    ix = inv
    ia = inv[(x + A) % t]
    keep = (ix >= 0) & (ia >= 0)
    return x[keep], ix[keep], ia[keep]


def vsum_grid(t, A, ms, ns, inv, roots, literal):
    ms = np.mod(np.asarray(ms, dtype=np.int64), t)
    ns = np.mod(np.asarray(ns, dtype=np.int64), t)
    x, ix, ia = _admissible(t, A, inv)
    out = np.zeros((len(ms), len(ns)), dtype=complex)
    fails = 0
    for b, n in enumerate(ns):
        if literal:
            iz = inv[(n * x + A) % t]
            ok = iz >= 0
            fails += int(np.count_nonzero(~ok))
            ixb, iz = ix[ok], iz[ok]
        else:
            ixb, iz = ix, (n * ia) % t
        ph = (ms[:, None] * ixb[None, :] - iz[None, :]) % t
        out[:, b] = roots[ph].sum(axis=1)
    return out, fails


def vsum_batch(t, As, ms, n, inv, roots, literal):
    ns = np.array([n], dtype=np.int64)
    rows, fails = [], 0
    for A in np.asarray(As, dtype=np.int64):
        v, f = vsum_grid(t, int(A) % t, ms, ns, inv, roots, literal)
        rows.append(v[:, 0])
        fails += f
    return np.array(rows, dtype=complex).reshape(len(rows), len(ms)), fails


def admissible_coefficients(t, A, inv, roots):
    out = np.zeros(t, dtype=complex)
    _, ix, ia = _admissible(t, A, inv)
    out[ix] = roots[(-ia) % t]
    return out


__all__ = ["inverse_table", "vsum_grid", "vsum_batch", "admissible_coefficients"]
