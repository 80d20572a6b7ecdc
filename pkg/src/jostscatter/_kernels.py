"""Compiled propagators for the two radial first-order systems.

The hot loop of every Jost-matrix solve is one straight complex segment
integrated with the classic Fehlberg 4(5) pair.  The functions here are plain
Python written so that numba can compile them; when numba is unavailable (or
``JOSTSCATTER_NO_NUMBA`` is set) the package falls back to the generic
:mod:`jostscatter.odeint` driver instead, and these sources are only kept as
the jit input.

State layout: ``y[0]`` and ``y[1]`` are the two N x N matrices of the stacked
system; ``kind=0`` propagates the regular near-origin pair (A, B) built on
Riccati-Bessel/Neumann diagonals, ``kind=1`` the incoming/outgoing pair
(F_in, F_out) built on Riccati-Hankel diagonals.

Return status: 0 ok, 1 step underflow, 2 step budget exhausted,
3 non-finite state.
"""

from __future__ import annotations

import cmath
import math
import os

import numpy as np

from . import specfun

try:
    if os.environ.get("JOSTSCATTER_NO_NUMBA"):
        raise ImportError("numba disabled by environment")
    from numba import njit as _njit

    def _jit(fn):
        return _njit(fn, cache=True)

    AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via env flag in tests
    def _jit(fn):
        return fn

    AVAILABLE = False

rb_j = _jit(specfun.rb_j)
rb_n = _jit(specfun.rb_n)
rb_h = _jit(specfun.rb_h)


def _deriv(kind, ell, k, cs, pw, dc, r, y):
    n = k.shape[0]
    v = np.zeros((n, n), np.complex128)
    for t in range(dc.shape[0]):
        rp = 1.0 + 0.0j
        for _ in range(pw[t]):
            rp *= r
        f = rp * cmath.exp(-dc[t] * r)
        for i in range(n):
            for j in range(n):
                v[i, j] += cs[t, i, j] * f
    wa = np.empty(n, np.complex128)
    wb = np.empty(n, np.complex128)
    if kind == 0:
        for i in range(n):
            z = k[i] * r
            wa[i] = rb_j(ell, z)
            wb[i] = rb_n(ell, z)
    else:
        for i in range(n):
            z = k[i] * r
            wa[i] = rb_h(-1, ell, z)
            wb[i] = rb_h(1, ell, z)
    out = np.empty((2, n, n), np.complex128)
    for i in range(n):
        for j in range(n):
            acc = 0j
            if kind == 0:
                for m in range(n):
                    acc += v[i, m] * (wa[m] * y[0, m, j] - wb[m] * y[1, m, j])
                out[0, i, j] = -(wb[i] / k[i]) * acc
                out[1, i, j] = -(wa[i] / k[i]) * acc
            else:
                for m in range(n):
                    acc += v[i, m] * (wa[m] * y[0, m, j] + wb[m] * y[1, m, j])
                out[0, i, j] = (0.5j / k[i]) * wb[i] * acc
                out[1, i, j] = (-0.5j / k[i]) * wa[i] * acc
    return out


_deriv = _jit(_deriv)


def _rkf45_segment(kind, ell, k, cs, pw, dc, r0, r1, y0, atol, rtol, h0, max_steps):
    dr = r1 - r0
    y = y0.copy()
    t = 0.0
    h = h0 if h0 < 1.0 else 1.0
    steps = 0
    while t < 1.0:
        if steps >= max_steps:
            return y, steps, 2
        if h > 1.0 - t:
            h = 1.0 - t
        if h < 1e-14:
            return y, steps, 1

        k1 = _deriv(kind, ell, k, cs, pw, dc, r0 + t * dr, y) * dr
        k2 = _deriv(kind, ell, k, cs, pw, dc, r0 + (t + 0.25 * h) * dr,
                    y + (0.25 * h) * k1) * dr
        k3 = _deriv(kind, ell, k, cs, pw, dc, r0 + (t + 0.375 * h) * dr,
                    y + h * ((3.0 / 32.0) * k1 + (9.0 / 32.0) * k2)) * dr
        k4 = _deriv(kind, ell, k, cs, pw, dc, r0 + (t + (12.0 / 13.0) * h) * dr,
                    y + h * ((1932.0 / 2197.0) * k1 - (7200.0 / 2197.0) * k2
                             + (7296.0 / 2197.0) * k3)) * dr
        k5 = _deriv(kind, ell, k, cs, pw, dc, r0 + (t + h) * dr,
                    y + h * ((439.0 / 216.0) * k1 - 8.0 * k2
                             + (3680.0 / 513.0) * k3 - (845.0 / 4104.0) * k4)) * dr
        k6 = _deriv(kind, ell, k, cs, pw, dc, r0 + (t + 0.5 * h) * dr,
                    y + h * ((-8.0 / 27.0) * k1 + 2.0 * k2 - (3544.0 / 2565.0) * k3
                             + (1859.0 / 4104.0) * k4 - (11.0 / 40.0) * k5)) * dr

        ynew = y + h * ((16.0 / 135.0) * k1 + (6656.0 / 12825.0) * k3
                        + (28561.0 / 56430.0) * k4 - (9.0 / 50.0) * k5
                        + (2.0 / 55.0) * k6)
        err = h * ((1.0 / 360.0) * k1 - (128.0 / 4275.0) * k3
                   - (2197.0 / 75240.0) * k4 + (1.0 / 50.0) * k5
                   + (2.0 / 55.0) * k6)

        emax = 0.0
        bad = False
        yf = ynew.ravel()
        yo = y.ravel()
        ef = err.ravel()
        for i in range(yf.size):
            m = abs(yf[i])
            if not math.isfinite(m):
                bad = True
                break
            mo = abs(yo[i])
            sc = atol + rtol * (mo if mo > m else m)
            q = abs(ef[i]) / sc
            if q > emax:
                emax = q
        if bad:
            return y, steps, 3

        steps += 1
        if emax <= 1.0:
            t += h
            y = ynew
        if emax <= 0.0:
            h = h * 5.0
        else:
            fac = 0.9 * emax ** (-0.2)
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.2:
                fac = 0.2
            h = h * fac
    return y, steps, 0


rkf45_segment = _jit(_rkf45_segment)
