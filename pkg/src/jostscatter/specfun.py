"""Riccati-Bessel, Riccati-Neumann and Riccati-Hankel functions of integer
order for arbitrary complex argument, with analytic derivatives.

These are the free radial waves: j_l is regular at the origin (vanishing as
z**(l+1)), n_l is the irregular companion, and h_l(+-) = j_l +- i*n_l are the
outgoing/incoming combinations.  Orders 0 and 1 use closed trigonometric
forms.  Higher orders recur: downward (Miller) for j_l, which is unstable
upward when |z| < l, and upward for n_l and h_l(+-), where the irregular part
dominates.

The scalar cores (``rb_*``) are written with plain ``cmath`` so they can also
be compiled by numba inside the radial-equation kernels; the public wrappers
accept scalars or numpy arrays.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

# Extra orders above the target for the downward recurrence start.
_MILLER_PAD = 18

# exp() overflows above this; switch h_l(+-) to scaled evaluation earlier.
_EXP_SAFE = 690.0
_EXP_MAX = 709.0


def rb_j(ell: int, z: complex) -> complex:
    """Riccati-Bessel j_ell(z), scalar core."""
    if z == 0:
        return 0j
    if ell == 0:
        return cmath.sin(z)
    if ell == 1:
        return cmath.sin(z) / z - cmath.cos(z)
    nstart = ell + _MILLER_PAD + int(2.0 * abs(z))
    up = 0j
    uc = 1e-150 + 0j
    u_ell = 0j
    have = False
    for l in range(nstart, 0, -1):
        um = ((2.0 * l + 1.0) / z) * uc - up
        up = uc
        uc = um
        if l - 1 == ell:
            u_ell = uc
            have = True
        if abs(uc.real) + abs(uc.imag) > 1e250:
            up /= 1e250
            uc /= 1e250
            if have:
                u_ell /= 1e250
    # uc is the unnormalised order-0 value, up the order-1 value; anchor the
    # normalisation on whichever closed form is farther from a zero.
    f0 = cmath.sin(z)
    f1 = cmath.sin(z) / z - cmath.cos(z)
    if abs(f0) >= abs(f1):
        return u_ell * (f0 / uc)
    return u_ell * (f1 / up)


def rb_n(ell: int, z: complex) -> complex:
    """Riccati-Neumann n_ell(z), scalar core.  Singular at z = 0."""
    if z == 0:
        raise ValueError("Riccati-Neumann function is singular at z = 0")
    nm = -cmath.cos(z)
    if ell == 0:
        return nm
    nc = -cmath.cos(z) / z - cmath.sin(z)
    for l in range(1, ell):
        nn = ((2.0 * l + 1.0) / z) * nc - nm
        nm = nc
        nc = nn
    return nc


def rb_h(sign: int, ell: int, z: complex) -> complex:
    """Riccati-Hankel h_ell(+-)(z) = j_ell +- i*n_ell, scalar core."""
    if z == 0:
        raise ValueError("Riccati-Hankel function is singular at z = 0")
    w = 1j * z if sign > 0 else -1j * z
    scale = w.real - _EXP_SAFE if w.real > _EXP_SAFE else 0.0
    h0 = (-1j if sign > 0 else 1j) * cmath.exp(w - scale)
    if ell == 0:
        hc = h0
    else:
        hm = h0
        hc = h0 * (1.0 / z - sign * 1j)
        for l in range(1, ell):
            hn = ((2.0 * l + 1.0) / z) * hc - hm
            hm = hc
            hc = hn
    if scale == 0.0:
        return hc
    m = abs(hc)
    if m > 0.0 and scale + math.log(m) > _EXP_MAX:
        raise OverflowError("Riccati-Hankel value exceeds the floating range")
    return hc * math.exp(scale)


def rb_j_dz(ell: int, z: complex) -> complex:
    """d/dz of the Riccati-Bessel function, scalar core."""
    if ell == 0:
        return cmath.cos(z)
    if z == 0:
        return 0j
    return rb_j(ell - 1, z) - (ell / z) * rb_j(ell, z)


def rb_n_dz(ell: int, z: complex) -> complex:
    """d/dz of the Riccati-Neumann function, scalar core."""
    if z == 0:
        raise ValueError("Riccati-Neumann function is singular at z = 0")
    if ell == 0:
        return cmath.sin(z)
    return rb_n(ell - 1, z) - (ell / z) * rb_n(ell, z)


def rb_h_dz(sign: int, ell: int, z: complex) -> complex:
    """d/dz of the Riccati-Hankel function, scalar core."""
    if z == 0:
        raise ValueError("Riccati-Hankel function is singular at z = 0")
    if ell == 0:
        return cmath.exp((1j if sign > 0 else -1j) * z)
    return rb_h(sign, ell - 1, z) - (ell / z) * rb_h(sign, ell, z)


def _check_order(ell: int) -> int:
    if ell != int(ell) or ell < 0:
        raise ValueError(f"order must be a non-negative integer, got {ell!r}")
    return int(ell)


def _check_sign(sign: int) -> int:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return sign


def _apply(core, args, z):
    zz = np.asarray(z, dtype=complex)
    if zz.ndim == 0:
        return core(*args, complex(zz))
    out = np.empty(zz.shape, dtype=complex)
    flat_in = zz.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = core(*args, complex(flat_in[i]))
    return out


def riccati_j(ell: int, z):
    """Riccati-Bessel function j_ell(z); regular, j_ell(0) = 0."""
    return _apply(rb_j, (_check_order(ell),), z)


def riccati_n(ell: int, z):
    """Riccati-Neumann function n_ell(z) = (h_ell(+) - h_ell(-)) / 2i."""
    return _apply(rb_n, (_check_order(ell),), z)


def riccati_h(sign: int, ell: int, z):
    """Riccati-Hankel function h_ell(+-)(z) = j_ell(z) +- i n_ell(z).

    Asymptotically -+i*exp(+-i*(z - ell*pi/2)), so h(+) decays for
    Im z > 0 and h(-) for Im z < 0.
    """
    return _apply(rb_h, (_check_sign(sign), _check_order(ell)), z)


def riccati_j_dz(ell: int, z):
    """Analytic derivative d/dz j_ell(z), from j' = j_(l-1) - (l/z) j_l."""
    return _apply(rb_j_dz, (_check_order(ell),), z)


def riccati_n_dz(ell: int, z):
    """Analytic derivative d/dz n_ell(z)."""
    return _apply(rb_n_dz, (_check_order(ell),), z)


def riccati_h_dz(sign: int, ell: int, z):
    """Analytic derivative d/dz h_ell(+-)(z)."""
    return _apply(rb_h_dz, (_check_sign(sign), _check_order(ell)), z)
