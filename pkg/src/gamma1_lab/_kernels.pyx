# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the V_qs exponential sums."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline long _inv(long a, long t) nogil:
    # extended Euclid; -1 when gcd(a, t) > 1
    cdef long r0 = t, r1 = a % t, s0 = 0, s1 = 1, qq, tmp
    if t == 1:
        return 0
    while r1 != 0:
        qq = r0 // r1
        tmp = r0 - qq * r1
        r0 = r1
        r1 = tmp
        tmp = s0 - qq * s1
        s0 = s1
        s1 = tmp
    if r0 != 1:
        return -1
    if s0 < 0:
        s0 += t
    return s0


def inverse_table(long t):
    """inv[x] = x^{-1} mod t, -1 where gcd(x, t) > 1; inv[0] = 0 when t == 1."""
    out = np.empty(t, dtype=np.int64)
    cdef cnp.int64_t[:] o = out
    cdef long x
    with nogil:
        for x in range(t):
            o[x] = _inv(x, t)
    return out


def vsum_grid(long t, long A, const cnp.int64_t[:] ms, const cnp.int64_t[:] ns,
              const cnp.int64_t[:] inv, const double complex[:] roots, bint literal):
    """V[a, b] = sum over admissible x mod t of e((m_a xbar - w_b(x)) / t).

    x is admissible when x and x + A are units mod t. w_b(x) is the inverse of
    n_b x + A (literal reading) or n_b times the inverse of x + A (scaled reading).
    Returns (V, failures) where failures counts admissible x whose literal
    inverse does not exist.
    """
    cdef Py_ssize_t nm = ms.shape[0], nn = ns.shape[0], a, b
    out = np.zeros((nm, nn), dtype=np.complex128)
    cdef double complex[:, :] o = out
    cdef cnp.int64_t[:] mm = np.mod(np.asarray(ms), t).astype(np.int64)
    cdef cnp.int64_t[:] nr = np.mod(np.asarray(ns), t).astype(np.int64)
    cdef long x, ix, ia, iz, ph, fails = 0
    with nogil:
        for x in range(t):
            ix = inv[x]
            if ix < 0:
                continue
            ia = inv[(x + A) % t]
            if ia < 0:
                continue
            for b in range(nn):
                if literal:
                    iz = inv[(nr[b] * x + A) % t]
                    if iz < 0:
                        fails += 1
                        continue
                else:
                    iz = (nr[b] * ia) % t
                for a in range(nm):
                    ph = (mm[a] * ix + t - iz) % t
                    o[a, b] = o[a, b] + roots[ph]
    return out, fails


def admissible_coefficients(long t, long A, const cnp.int64_t[:] inv, const double complex[:] roots):
    """c[y] = e(-inv(x + A)/t) at y = inv(x) for admissible x, zero elsewhere.

    sum_y c[y] e(m y / t) = V(m, 1; t) for every residue m.
    """
    out = np.zeros(t, dtype=np.complex128)
    cdef double complex[:] o = out
    cdef long x, ix, ia
    with nogil:
        for x in range(t):
            ix = inv[x]
            if ix < 0:
                continue
            ia = inv[(x + A) % t]
            if ia < 0:
                continue
            o[ix] = roots[(t - ia) % t]
    return out


def vsum_batch(long t, const cnp.int64_t[:] As, const cnp.int64_t[:] ms, long n,
               const cnp.int64_t[:] inv, const double complex[:] roots, bint literal):
    """V[i, a] = V(m_a, n; t) with shift A_i in place of qs; returns (V, failures)."""
    cdef Py_ssize_t na = As.shape[0], nm = ms.shape[0], i, a
    out = np.zeros((na, nm), dtype=np.complex128)
    cdef double complex[:, :] o = out
    cdef cnp.int64_t[:] mm = np.mod(np.asarray(ms), t).astype(np.int64)
    cdef long nr = n % t, x, ix, ia, iz, ph, A, fails = 0
    with nogil:
        for i in range(na):
            A = As[i] % t
            for x in range(t):
                ix = inv[x]
                if ix < 0:
                    continue
                ia = inv[(x + A) % t]
                if ia < 0:
                    continue
                if literal:
                    iz = inv[(nr * x + A) % t]
                    if iz < 0:
                        fails += 1
                        continue
                else:
                    iz = (nr * ia) % t
                for a in range(nm):
                    ph = (mm[a] * ix + t - iz) % t
                    o[i, a] = o[i, a] + roots[ph]
    return out, fails
