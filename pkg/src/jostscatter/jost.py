"""Jost matrices by direct integration of first-order radial systems, and the
scattering quantities built from them.

The regular solution of the coupled radial equation is written as
``phi = W_in * F_in + W_out * F_out`` with diagonal incoming/outgoing wave
matrices; the unknown coefficient matrices obey a first-order system whose
constant large-r limits are the Jost matrices f_in and f_out.  Near the
origin that system suffers from the cancellation of the singular parts of the
two Riccati-Hankel functions, so integration starts in the equivalent
regular pair A = F_in + F_out, B = i(F_in - F_out) on the real interval
[r_min, b], converts at b, and then follows the rotated ray
``b + z*exp(i*theta)`` to the truncation radius.

Rotating the ray turns the unitary cuts down by 2*theta and exposes the
unphysical-sheet region: f_in is reachable where sin(theta + arg k_n) >= 0
for every channel, f_out where the signs are reversed.  For an exponentially
decaying potential each condition extends into a band around the dividing
line, which is what lets both matrices come out of a single run on or near
that line; otherwise the run is repeated with a second angle placing the
point on the other side of the cut.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, odeint
from .errors import ConvergenceError, IntegrationError, UnreachableError, ValidationError
from .model import ChannelModel, EnergyPoint, channel_momenta, physical_sheet, potential_matrix
from .odeint import DEFAULT_CONFIG, ComplexPath, IntegratorConfig
from .specfun import rb_h, rb_j, rb_n

R_MIN_DEFAULT = 1e-4
B_DEFAULT = 1.0
R_DEFAULT = 30.0

THETA_STEP = 0.05 * math.pi
THETA_MAX = 0.4 * math.pi

# Fraction of the exponential-falloff band within which a nominally
# wrong-side matrix is still accepted as reachable.
BAND_FRACTION = 0.5

# Max entry change of the sought Jost matrix over a 10% ray extension,
# relative to the matrix scale.
TAIL_TOL = 1e-9

_KERNEL_STATUS = {
    1: "step size underflow (singularity or stiffness on the path)",
    2: "step budget exhausted",
    3: "state overflowed",
}


@dataclass(frozen=True)
class JostMatrices:
    """The pair f_in(E), f_out(E) with the geometry that produced them.

    ``f_in_valid``/``f_out_valid`` record whether each matrix is reachable at
    the rotation angle used *and* passed the large-r tail test; an invalid
    matrix is returned as-is but is numerically meaningless.
    """

    f_in: np.ndarray
    f_out: np.ndarray
    point: EnergyPoint
    theta: float
    r_min: float
    b: float
    R: float
    R_used: float
    f_in_valid: bool
    f_out_valid: bool
    steps: int


@dataclass(frozen=True)
class SMatrix:
    """S = f_out * f_in**-1 at an energy point."""

    s: np.ndarray
    point: EnergyPoint


def rhs_ab(model: ChannelModel, point: EnergyPoint, r: complex, a: np.ndarray, b: np.ndarray):
    """Derivatives (A', B') of the regular near-origin pair at radius r.

    A' = -K^-1 N V (J A - N B),  B' = -K^-1 J V (J A - N B), with J and N the
    diagonal Riccati-Bessel/Neumann matrices at arguments k_n r.
    """
    k = channel_momenta(model, point)
    jv = np.array([rb_j(model.ell, complex(ki * r)) for ki in k])
    nv = np.array([rb_n(model.ell, complex(ki * r)) for ki in k])
    v = potential_matrix(model, r)
    g = v @ (jv[:, None] * a - nv[:, None] * b)
    return -(nv / k)[:, None] * g, -(jv / k)[:, None] * g


def rhs_f(model: ChannelModel, point: EnergyPoint, r: complex, f_in: np.ndarray, f_out: np.ndarray):
    """Derivatives (F_in', F_out') of the incoming/outgoing pair at radius r.

    The Lagrange condition W_in F_in' + W_out F_out' = 0 is built into the
    pair of equations, so the first derivative of the regular solution only
    touches the free waves.
    """
    k = channel_momenta(model, point)
    wm = np.array([rb_h(-1, model.ell, complex(ki * r)) for ki in k])
    wp = np.array([rb_h(+1, model.ell, complex(ki * r)) for ki in k])
    v = potential_matrix(model, r)
    g = v @ (wm[:, None] * f_in + wp[:, None] * f_out)
    return (0.5j / k * wp)[:, None] * g, (-0.5j / k * wm)[:, None] * g


def ab_to_f(a: np.ndarray, b: np.ndarray):
    """Invert A = F_in + F_out, B = i(F_in - F_out); model-independent."""
    return (a - 1j * b) / 2.0, (a + 1j * b) / 2.0


def f_to_ab(f_in: np.ndarray, f_out: np.ndarray):
    """Forward map to the regular pair: A = F_in + F_out, B = i(F_in - F_out)."""
    return f_in + f_out, 1j * (f_in - f_out)


def _term_arrays(model: ChannelModel):
    n = model.n_channels
    if not model.terms:
        return (
            np.zeros((0, n, n), np.complex128),
            np.zeros(0, np.int64),
            np.zeros(0, np.float64),
        )
    cs = np.array(
        [model.mass_scale[:, None] * t.coeff for t in model.terms], dtype=np.complex128
    )
    pw = np.array([t.power for t in model.terms], dtype=np.int64)
    dc = np.array([t.decay for t in model.terms], dtype=np.float64)
    return cs, pw, dc


def _np_deriv(kind, ell, kvec, cs, pw, dc, r, y):
    """Stacked derivative via numpy and the scalar wave functions.

    Same formulas as the compiled kernel; used when numba is unavailable.
    """
    n = kvec.shape[0]
    v = np.zeros((n, n), dtype=complex)
    for c, p, a in zip(cs, pw, dc):
        v += c * (r ** int(p) * cmath.exp(-a * r))
    z = kvec * r
    if kind == 0:
        wa = np.array([rb_j(ell, complex(zi)) for zi in z])
        wb = np.array([rb_n(ell, complex(zi)) for zi in z])
        g = v @ (wa[:, None] * y[0] - wb[:, None] * y[1])
        return np.stack((-(wb / kvec)[:, None] * g, -(wa / kvec)[:, None] * g))
    wa = np.array([rb_h(-1, ell, complex(zi)) for zi in z])
    wb = np.array([rb_h(+1, ell, complex(zi)) for zi in z])
    g = v @ (wa[:, None] * y[0] + wb[:, None] * y[1])
    return np.stack(((0.5j / kvec * wb)[:, None] * g,
                     (-0.5j / kvec * wa)[:, None] * g))


def _propagate(arrays, ell, kvec, kind, r0, r1, y, config, steps_used):
    """One straight segment via the compiled kernel or the generic driver."""
    budget = config.max_steps - steps_used
    if budget <= 0:
        raise IntegrationError(f"step budget of {config.max_steps} exhausted")
    cs, pw, dc = arrays
    if _kernels.AVAILABLE:
        out, steps, status = _kernels.rkf45_segment(
            kind, ell, kvec, cs, pw, dc, complex(r0), complex(r1),
            np.ascontiguousarray(y), config.abs_tol, config.rel_tol,
            config.initial_step, budget,
        )
        if status != 0:
            raise IntegrationError(f"{_KERNEL_STATUS[status]} near r = {r1}")
        return out, steps

    def rhs(r, yy):
        return _np_deriv(kind, ell, kvec, cs, pw, dc, r, yy)

    seg_config = IntegratorConfig(
        abs_tol=config.abs_tol, rel_tol=config.rel_tol,
        initial_step=config.initial_step, max_steps=budget,
    )
    res = odeint.integrate(rhs, ComplexPath(vertices=(r0, r1)), y, seg_config)
    return res.state, res.steps


def _reach_margins(model, kvec, theta):
    """Per-channel sin(theta + arg k_n) and the exponential-band allowance."""
    margins = np.sin(theta + np.angle(kvec))
    a = model.min_decay()
    if math.isfinite(a):
        band = BAND_FRACTION * a * math.cos(theta) / (2.0 * np.abs(kvec))
    else:
        band = np.full(len(kvec), np.inf)
    return margins, band


def theta_for_f_in(model: ChannelModel, point: EnergyPoint,
                   step: float = THETA_STEP, theta_max: float = THETA_MAX) -> float:
    """Smallest schedule angle 0, step, 2*step, ... that opens f_in strictly."""
    kvec = channel_momenta(model, point)
    ang = np.angle(kvec)
    m = int(round(theta_max / step))
    for i in range(m + 1):
        theta = i * step
        if np.all(np.sin(theta + ang) > 1e-12):
            return theta
    raise UnreachableError(
        f"f_in unreachable at E = {point.energy}: no rotation angle up to "
        f"{theta_max:.4f} satisfies sin(theta + arg k_n) > 0 for all channels"
    )


def theta_for_f_out(model: ChannelModel, point: EnergyPoint,
                    step: float = THETA_STEP, theta_max: float = THETA_MAX) -> float:
    """Largest schedule angle in [-theta_max, theta_max] placing the point
    below every rotated cut (sin(theta + arg k_n) < 0 for all channels)."""
    kvec = channel_momenta(model, point)
    ang = np.angle(kvec)
    m = int(round(theta_max / step))
    for i in range(2 * m + 1):
        theta = (m - i) * step
        if np.all(np.sin(theta + ang) < -1e-12):
            return theta
    raise UnreachableError(
        f"f_out unreachable at E = {point.energy}: no rotation angle down to "
        f"{-theta_max:.4f} satisfies sin(theta + arg k_n) < 0 for all channels"
    )


def _tail_delta(y_now, y_prev, index):
    scale = max(1.0, float(np.max(np.abs(y_prev[index]))))
    return float(np.max(np.abs(y_now[index] - y_prev[index]))) / scale


def _extension_length(model, theta, probe_len, delta, kvec, state_scale):
    """Size the single ray extension from the measured tail.

    Along the rotated ray every Jost tail ultimately decays like the
    potential envelope exp(-a_min * z * cos(theta)), so the extra length
    needed to pull a measured change ``delta`` under the tail tolerance
    follows from that rate.  Near-threshold channels decay somewhat slower
    through the mixed-wave cross terms, hence the 0.6 safety factor.

    The unwanted companion matrix can grow like exp(g*z) along the same
    ray; the extension is capped so the state stays far from the floating
    overflow limit (the sought tail keeps shrinking regardless).
    """
    rate = 0.6 * model.min_decay() * math.cos(theta)
    if math.isfinite(rate) and rate > 1e-3:
        extra = math.log(max(delta / (0.05 * TAIL_TOL), 10.0)) / rate
    else:
        extra = 2.0 * probe_len
    extra = min(extra, 8.0 * probe_len)
    margins = np.sin(theta + np.angle(kvec))
    growth = float(np.max(2.0 * np.abs(kvec) * margins)) - \
        model.min_decay() * math.cos(theta)
    if math.isfinite(growth) and growth > 0.0:
        headroom = (520.0 - math.log(max(state_scale, 1.0))) / growth
        extra = min(extra, max(headroom, 0.0))
    return probe_len + extra


def jost_matrices(
    model: ChannelModel,
    point: EnergyPoint,
    theta: float = 0.0,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
    which: str = "both",
) -> JostMatrices:
    """Compute the Jost matrices at an energy point.

    Integrates the regular pair from r_min to b on the real axis with the
    exact limits A = 2*Identity, B = 0 imposed at r_min, converts to the
    incoming/outgoing pair at b, and follows the ray b + z*exp(i*theta) out
    to the truncation radius.  Convergence at the far end is verified by
    extending the ray 10% and requiring the sought matrix to change by less
    than 1e-9 (relative to its scale); one further extension is tried before
    giving up.

    ``which`` selects the matrix the caller needs ("in", "out" or "both");
    an unreachable requested matrix raises :class:`UnreachableError`, while
    the other one is merely flagged invalid.
    """
    if which not in ("in", "out", "both"):
        raise ValidationError(f"which must be 'in', 'out' or 'both', not {which!r}")
    if not (0 < r_min < b < R):
        raise ValidationError("geometry requires 0 < r_min < b < R")
    if not abs(theta) < 0.5 * math.pi:
        raise ValidationError("|theta| must be below pi/2")

    kvec = channel_momenta(model, point)
    margins, band = _reach_margins(model, kvec, theta)
    in_ok = bool(np.all(margins >= -(band + 1e-12)))
    out_ok = bool(np.all(margins <= band + 1e-12))
    if which in ("in", "both") and not in_ok:
        raise UnreachableError(
            f"f_in unreachable at E = {point.energy} with theta = {theta:.4f}: "
            "sin(theta + arg k_n) < 0 beyond the potential falloff band"
        )
    if which in ("out", "both") and not out_ok:
        raise UnreachableError(
            f"f_out unreachable at E = {point.energy} with theta = {theta:.4f}: "
            "sin(theta + arg k_n) > 0 beyond the potential falloff band"
        )

    n = model.n_channels
    arrays = _term_arrays(model)
    y = np.zeros((2, n, n), np.complex128)
    y[0] = 2.0 * np.eye(n)
    y, steps = _propagate(arrays, model.ell, kvec, 0, r_min, b, y, config, 0)
    f_in, f_out = ab_to_f(y[0], y[1])
    y = np.stack((f_in, f_out))

    e_th = cmath.exp(1j * theta)
    L = R - b
    y, s = _propagate(arrays, model.ell, kvec, 1, b, b + L * e_th, y, config, steps)
    steps += s

    sought = {"in": (0,), "out": (1,), "both": (0, 1)}[which]
    length = L
    r_used = R
    for attempt in range(2):
        probe_len = length * 1.1
        y_probe, s = _propagate(
            arrays, model.ell, kvec, 1, b + length * e_th, b + probe_len * e_th,
            y, config, steps,
        )
        steps += s
        deltas = {idx: _tail_delta(y_probe, y, idx) for idx in (0, 1)}
        r_used = b + probe_len
        if max(deltas[idx] for idx in sought) < TAIL_TOL:
            y = y_probe
            in_ok = in_ok and deltas[0] < TAIL_TOL
            out_ok = out_ok and deltas[1] < TAIL_TOL
            break
        if attempt == 1:
            raise ConvergenceError(
                f"Jost tail not settled at |r| ~ {b + probe_len:.1f} for "
                f"E = {point.energy} (change {max(deltas[i] for i in sought):.2e})"
            )
        ext_len = _extension_length(model, theta, probe_len,
                                    max(deltas[i] for i in sought),
                                    kvec, float(np.max(np.abs(y_probe))))
        y, s = _propagate(
            arrays, model.ell, kvec, 1, b + probe_len * e_th, b + ext_len * e_th,
            y_probe, config, steps,
        )
        steps += s
        length = ext_len

    return JostMatrices(
        f_in=y[0], f_out=y[1], point=point, theta=theta,
        r_min=r_min, b=b, R=R, R_used=r_used,
        f_in_valid=in_ok, f_out_valid=out_ok, steps=steps,
    )


def f_in_difference_pair(
    model: ChannelModel,
    energy: complex,
    eps: float,
    sheet,
    theta: float,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> tuple[np.ndarray, np.ndarray]:
    """f_in at E + eps and E - eps propagated with a shared step sequence.

    Central differences of det f_in are dominated by the step-pattern jitter
    of two independent adaptive runs once the entries grow large.  Stacking
    the two energies into one block-diagonal system forces a common step
    sequence, so the integration errors of the two halves track each other
    and cancel in the difference.
    """
    sheet = tuple(sheet)
    kp = channel_momenta(model, EnergyPoint(energy + eps, sheet))
    km = channel_momenta(model, EnergyPoint(energy - eps, sheet))
    n = model.n_channels
    kcat = np.concatenate([kp, km])

    cs, pw, dc = _term_arrays(model)
    cs2 = np.zeros((cs.shape[0], 2 * n, 2 * n), np.complex128)
    cs2[:, :n, :n] = cs
    cs2[:, n:, n:] = cs
    arrays = (cs2, pw, dc)

    y = np.zeros((2, 2 * n, 2 * n), np.complex128)
    y[0] = 2.0 * np.eye(2 * n)
    y, steps = _propagate(arrays, model.ell, kcat, 0, r_min, b, y, config, 0)
    f_in, f_out = ab_to_f(y[0], y[1])
    y = np.stack((f_in, f_out))

    e_th = cmath.exp(1j * theta)
    L = R - b
    y, s = _propagate(arrays, model.ell, kcat, 1, b, b + L * e_th, y, config, steps)
    steps += s
    length = L
    for attempt in range(2):
        probe_len = length * 1.1
        y_probe, s = _propagate(arrays, model.ell, kcat, 1, b + length * e_th,
                                b + probe_len * e_th, y, config, steps)
        steps += s
        delta = _tail_delta(y_probe, y, 0)
        if delta < TAIL_TOL:
            y = y_probe
            break
        if attempt == 1:
            raise ConvergenceError(
                f"Jost tail not settled for the paired run at E = {energy}"
            )
        ext_len = _extension_length(model, theta, probe_len, delta,
                                    kcat, float(np.max(np.abs(y_probe))))
        y, s = _propagate(arrays, model.ell, kcat, 1, b + probe_len * e_th,
                          b + ext_len * e_th, y_probe, config, steps)
        steps += s
        length = ext_len
    return y[0, :n, :n].copy(), y[0, n:, n:].copy()


def jost_pair(
    model: ChannelModel,
    point: EnergyPoint,
    theta_in: float | None = None,
    theta_out: float | None = None,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> tuple[np.ndarray, np.ndarray]:
    """Valid (f_in, f_out) at one point, re-running with a second rotation
    angle when the point is not on the dividing line.

    Rotation-angle invariance of the Jost matrices makes the two runs
    consistent: the normalisation is pinned by the boundary condition at
    r_min, not chosen per run.
    """
    th_in = theta_for_f_in(model, point) if theta_in is None else theta_in
    jm = jost_matrices(model, point, th_in, r_min, b, R, config, which="in")
    if jm.f_out_valid:
        return jm.f_in, jm.f_out
    th_out = theta_for_f_out(model, point) if theta_out is None else theta_out
    jm_out = jost_matrices(model, point, th_out, r_min, b, R, config, which="out")
    return jm.f_in, jm_out.f_out


def adjugate(m: np.ndarray) -> np.ndarray:
    """Adjugate (transposed cofactor matrix), finite at det = 0."""
    n = m.shape[0]
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    if n == 2:
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex)
    adj = np.empty_like(m, dtype=complex)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            adj[j, i] = (-1) ** (i + j) * np.linalg.det(minor)
    return adj


def null_vector(m: np.ndarray) -> np.ndarray:
    """Unit right null vector (smallest singular direction) of m."""
    _, _, vh = np.linalg.svd(m)
    return vh[-1].conj()


def det_central_difference(f_plus: np.ndarray, f_minus: np.ndarray, eps: float) -> complex:
    """(det f_plus - det f_minus) / (2 eps) without cancellation.

    Near a determinant zero the two values cancel almost completely, and for
    matrices with large entries the plain subtraction is dominated by the
    roundoff of forming each determinant.  For 2 x 2 (and 3 x 3) matrices the
    difference has the exact polynomial form 2 tr(adj(M) D) (+ 2 det D),
    with M and D the mean and half-difference, which stays accurate.
    """
    n = f_plus.shape[0]
    mean = 0.5 * (f_plus + f_minus)
    half = 0.5 * (f_plus - f_minus)
    if n <= 3:
        d = complex(np.trace(adjugate(mean) @ half))
        if n == 3:
            d += complex(np.linalg.det(half))
        return d / eps
    return complex(np.linalg.det(f_plus) - np.linalg.det(f_minus)) / (2.0 * eps)


def s_matrix_at(
    model: ChannelModel,
    point: EnergyPoint,
    theta_in: float | None = None,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> SMatrix:
    """S = f_out * f_in**-1 at an arbitrary energy point."""
    f_in, f_out = jost_pair(model, point, theta_in=theta_in,
                            r_min=r_min, b=b, R=R, config=config)
    det = complex(np.linalg.det(f_in))
    if abs(det) < 1e-13:
        raise ConvergenceError(
            f"det f_in = {det:.3e} at E = {point.energy}: S-matrix pole"
        )
    s = f_out @ adjugate(f_in) / det
    return SMatrix(s=s, point=point)


def s_matrix(
    model: ChannelModel,
    e_real: float,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> SMatrix:
    """S-matrix on the physical rim at a real energy (rotation angle 0).

    Requires E strictly above at least one threshold and off every
    threshold.  Between thresholds the closed-channel tail decays only as
    the falloff band allows; raise R if the tail test rejects the default.
    """
    e_real = float(e_real)
    if not e_real > min(model.thresholds):
        raise ValidationError(
            f"E = {e_real} must be strictly above the lowest threshold"
        )
    point = EnergyPoint(e_real, physical_sheet(model.n_channels))
    return s_matrix_at(model, point, theta_in=0.0, r_min=r_min, b=b, R=R, config=config)


def flux_weighted(model: ChannelModel, smat: SMatrix) -> np.ndarray:
    """Similarity transform D^{1/2} S D^{-1/2} with D = diag(k_n / mu_n).

    At real energies above all thresholds this weighting makes the matrix
    unitary and (for symmetric interactions) symmetric.
    """
    k = channel_momenta(model, smat.point)
    d = np.sqrt(k / np.asarray(model.masses))
    return d[:, None] * smat.s / d[None, :]


def cross_section(
    model: ChannelModel,
    e_real: float,
    from_channel: int,
    to_channel: int,
    k_power: int = 1,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
    smat: SMatrix | None = None,
) -> float:
    """Partial-wave cross section sigma(n -> n') = (pi/k_n**p) |delta - S_n'n|**2.

    Channels are 1-based labels.  The momentum exponent ``k_power`` defaults
    to 1, matching the formula as printed alongside the benchmark model; the
    conventional partial-wave normalisation uses 2.  ``smat`` may carry a
    precomputed S-matrix at e_real to avoid re-solving.
    """
    nch = model.n_channels
    if not (1 <= from_channel <= nch and 1 <= to_channel <= nch):
        raise ValidationError(f"channel labels must be in 1..{nch}")
    if k_power not in (1, 2):
        raise ValidationError("k_power must be 1 or 2")
    if not e_real > model.thresholds[from_channel - 1]:
        raise ValidationError(
            f"entrance channel {from_channel} is closed at E = {e_real}"
        )
    if smat is None:
        smat = s_matrix(model, e_real, r_min=r_min, b=b, R=R, config=config)
    k = channel_momenta(model, smat.point)
    kn = k[from_channel - 1].real
    delta = 1.0 if from_channel == to_channel else 0.0
    amp = delta - smat.s[to_channel - 1, from_channel - 1]
    return float(math.pi / kn**k_power * abs(amp) ** 2)


def wavefunction(
    model: ChannelModel,
    point: EnergyPoint,
    coefficients,
    radial_grid,
    theta: float = 0.0,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> tuple[np.ndarray, np.ndarray]:
    """Radial wave function u(r) = phi(E, r) c recorded on a grid.

    Grid points are inserted as path vertices (no interpolation): real points
    up to b are taken on the axis in the regular representation
    u = (J A - N B) c, and points beyond b are mapped onto the rotated ray
    r = b + (g - b) e^{i theta} in the incoming/outgoing representation
    u = (W_in F_in + W_out F_out) c.

    ``coefficients`` may be None at a spectral point, selecting the null
    vector of this run's own incoming matrix at the truncation radius;
    deriving it from a separate solve would leave a tiny mismatch that the
    growing incoming wave amplifies.  Even so, the cancellation limits the
    meaningful range to exp(|Im k| r) * |f_in c| below the wanted accuracy,
    so keep the grid end moderate for bound states.
    """
    grid = np.asarray(sorted(float(g) for g in radial_grid))
    if grid.size == 0:
        raise ValidationError("radial grid is empty")
    if grid[0] < r_min:
        raise ValidationError("grid points must lie at or beyond r_min")

    kvec = channel_momenta(model, point)
    ell = model.ell
    n = model.n_channels
    arrays = _term_arrays(model)
    steps = 0

    y = np.zeros((2, n, n), np.complex128)
    y[0] = 2.0 * np.eye(n)
    snapshots = []

    pos = r_min
    i = 0
    while i < grid.size and grid[i] <= b:
        if grid[i] > pos:
            y, s = _propagate(arrays, ell, kvec, 0, pos, grid[i], y, config, steps)
            steps += s
            pos = grid[i]
        snapshots.append((0, complex(pos), y.copy()))
        i += 1
    if pos < b:
        y, s = _propagate(arrays, ell, kvec, 0, pos, b, y, config, steps)
        steps += s
        pos = b

    f_in, f_out = ab_to_f(y[0], y[1])
    y = np.stack((f_in, f_out))
    e_th = cmath.exp(1j * theta)
    cur = complex(b)
    while i < grid.size:
        target = b + (grid[i] - b) * e_th
        y, s = _propagate(arrays, ell, kvec, 1, cur, target, y, config, steps)
        steps += s
        cur = target
        snapshots.append((1, cur, y.copy()))
        i += 1
    end = b + (R - b) * e_th
    if abs(end - cur) > 1e-12 and R > grid[-1]:
        y, s = _propagate(arrays, ell, kvec, 1, cur, end, y, config, steps)
        steps += s

    if coefficients is None:
        c = null_vector(y[0])
    else:
        c = np.asarray(coefficients, dtype=complex)
        if c.shape != (n,):
            raise ValidationError("coefficient vector length must match channel count")

    r_points = np.empty(grid.size, dtype=complex)
    u = np.empty((n, grid.size), dtype=complex)
    for idx, (kind, r, state) in enumerate(snapshots):
        if kind == 0:
            jv = np.array([rb_j(ell, complex(ki * r)) for ki in kvec])
            nv = np.array([rb_n(ell, complex(ki * r)) for ki in kvec])
            u[:, idx] = (jv[:, None] * state[0] - nv[:, None] * state[1]) @ c
        else:
            wm = np.array([rb_h(-1, ell, complex(ki * r)) for ki in kvec])
            wp = np.array([rb_h(+1, ell, complex(ki * r)) for ki in kvec])
            u[:, idx] = (wm[:, None] * state[0] + wp[:, None] * state[1]) @ c
        r_points[idx] = r

    return r_points, u
