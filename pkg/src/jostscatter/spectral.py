"""Location of spectral points as zeros of det f_in, and resonance widths.

Bound states sit on the all-physical sheet at real energies below the lowest
threshold; resonances are zeros on a sheet with at least one unphysical sign
at Im E < 0.  Candidates come from a coarse |det| scan, are polished by a
complex Newton iteration with a central-difference derivative, deduplicated,
and (for resonances) given total and partial widths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ScatteringError, ValidationError
from .jost import (
    B_DEFAULT,
    R_DEFAULT,
    R_MIN_DEFAULT,
    adjugate,
    det_central_difference,
    f_in_difference_pair,
    jost_matrices,
    jost_pair,
    theta_for_f_in,
)
from .model import ChannelModel, EnergyPoint, physical_sheet, unphysical_sheet
from .odeint import DEFAULT_CONFIG, IntegratorConfig

NEWTON_EPS = 1e-6
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
DEDUPE_TOL = 1e-6

# Default Noro-Taylor-scale search boxes (re_min, re_max, im_min, im_max).
BOUND_REGION = (-3.0, -5e-3, -1e-6, 1e-6)
BOUND_GRID = (120, 3)
RESONANCE_REGION = (0.5, 9.75, -25.5, -5e-5)
RESONANCE_GRID = (38, 30)


@dataclass(frozen=True)
class SpectralPoint:
    """A converged zero of det f_in."""

    energy: complex
    kind: str  # "bound" | "resonance" | "virtual"
    sheet: tuple[int, ...]
    det_residual: float
    det_derivative: complex = 0j


@dataclass(frozen=True)
class ResonancePole:
    """Resonance E_res = E_r - i*Gamma/2 with total and partial widths."""

    e_r: float
    gamma: float
    partial_widths: tuple[float, ...]
    sheet: tuple[int, ...]
    det_residual: float = 0.0

    @property
    def energy(self) -> complex:
        return complex(self.e_r, -0.5 * self.gamma)


@dataclass(frozen=True)
class ScanResult:
    candidates: tuple[complex, ...]
    failures: tuple[tuple[complex, str], ...] = ()


@dataclass(frozen=True)
class Spectrum:
    bound: tuple[SpectralPoint, ...]
    resonances: tuple[ResonancePole, ...]
    failures: tuple[str, ...] = field(default_factory=tuple)


def det_jost(
    model: ChannelModel,
    point: EnergyPoint,
    theta: float | None = None,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> complex:
    """det f_in(E); zero exactly at the spectral points."""
    th = theta_for_f_in(model, point) if theta is None else theta
    jm = jost_matrices(model, point, th, r_min, b, R, config, which="in")
    return complex(np.linalg.det(jm.f_in))


def scan_minima(
    model: ChannelModel,
    region: tuple[float, float, float, float],
    grid: tuple[int, int],
    sheet,
    theta: float | None = None,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> ScanResult:
    """Strict local minima of |det f_in| on a rectangular energy grid.

    Minima are collected both for the raw magnitude and for the magnitude
    normalised by the matrix entry scale (max |entry|**N): the raw surface
    resolves narrow zeros near the real axis, while the normalised one
    removes the smooth envelope that masks shallow near-threshold dips on
    coarse grids.  The union is returned; refinement deduplicates.

    Neighbours outside the grid or at failed evaluations are ignored, so
    edge-row minima are still reported.  Per-point failures (threshold
    branch points, unreachable angles) are collected, not fatal.
    """
    re_min, re_max, im_min, im_max = (float(x) for x in region)
    n_re, n_im = int(grid[0]), int(grid[1])
    if not (re_min < re_max and im_min <= im_max and n_re >= 2 and n_im >= 1):
        raise ValidationError(f"malformed scan region {region} / grid {grid}")
    res = np.linspace(re_min, re_max, n_re)
    ims = np.linspace(im_min, im_max, n_im)
    sheet = tuple(sheet)
    nch = model.n_channels

    raw = np.full((n_re, n_im), np.nan)
    normed = np.full((n_re, n_im), np.nan)
    failures = []
    for i, re in enumerate(res):
        for j, im in enumerate(ims):
            e = complex(re, im)
            point = EnergyPoint(e, sheet)
            try:
                th = theta_for_f_in(model, point) if theta is None else theta
                f_in = jost_matrices(model, point, th, r_min, b, R, config,
                                     which="in").f_in
                raw[i, j] = abs(np.linalg.det(f_in))
                scale = float(np.max(np.abs(f_in))) ** nch
                normed[i, j] = raw[i, j] / max(scale, 1e-300)
            except ScatteringError as exc:
                failures.append((e, str(exc)))

    candidates: list[complex] = []
    for mag in (raw, normed):
        for i in range(n_re):
            for j in range(n_im):
                v = mag[i, j]
                if not np.isfinite(v):
                    continue
                is_min = True
                has_neighbour = False
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        if di == 0 and dj == 0:
                            continue
                        ii, jj = i + di, j + dj
                        if (0 <= ii < n_re and 0 <= jj < n_im
                                and np.isfinite(mag[ii, jj])):
                            has_neighbour = True
                            if mag[ii, jj] <= v:
                                is_min = False
                                break
                    if not is_min:
                        break
                if is_min and has_neighbour:
                    e = complex(res[i], ims[j])
                    if e not in candidates:
                        candidates.append(e)

    return ScanResult(candidates=tuple(candidates), failures=tuple(failures))


def _continued_sheet(model: ChannelModel, energy: complex, sheet):
    """Sheet realizing the analytic continuation at a Newton iterate.

    The all-unphysical function continued upward through the cut above the
    highest threshold coincides with the all-physical evaluation there, so
    an iterate that briefly overshoots the real axis stays computable.
    """
    if (energy.imag > 0 and all(s == -1 for s in sheet)
            and energy.real > max(model.thresholds)):
        return physical_sheet(model.n_channels)
    return sheet


def _classify(model: ChannelModel, energy: complex, sheet) -> str:
    on_axis = abs(energy.imag) < 1e-8
    all_physical = all(s == 1 for s in sheet)
    if on_axis and all_physical and energy.real < min(model.thresholds):
        return "bound"
    if on_axis:
        return "virtual"
    return "resonance"


def refine_zero(
    model: ChannelModel,
    e0: complex,
    sheet,
    theta: float | None = None,
    tol: float = NEWTON_TOL,
    eps: float = NEWTON_EPS,
    max_iter: int = NEWTON_MAX_ITER,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> SpectralPoint:
    """Newton-polish a zero of det f_in from the seed e0.

    The derivative is the central difference (det(E+eps) - det(E-eps))/(2 eps)
    with eps = 1e-6 by default; convergence means |Newton step| < tol.  A
    vanishing derivative signals a multiple zero or a bad seed.

    Near a zero the determinant is evaluated with heavy cancellation, so its
    values carry a noise floor set by the integration accuracy; once the
    Newton steps stop shrinking below that floor (while already far inside
    the dedup tolerance) the pre-bounce iterate is accepted.
    """
    sheet = tuple(sheet)
    e = complex(e0)
    dprime = 0j
    prev_step = math.inf
    stall_threshold = 1e3 * tol
    for _ in range(max_iter):
        live_sheet = _continued_sheet(model, e, sheet)
        point = EnergyPoint(e, live_sheet)
        th = theta_for_f_in(model, point) if theta is None else theta
        d0 = det_jost(model, point, th, r_min, b, R, config)
        fp, fm = f_in_difference_pair(model, e, eps, live_sheet, th,
                                      r_min=r_min, b=b, R=R, config=config)
        dprime = det_central_difference(fp, fm, eps)
        if abs(dprime) < 1e-12 * max(1.0, abs(d0)):
            raise ConvergenceError(
                f"determinant derivative vanishes near E = {e}: "
                "multiple zero or bad seed"
            )
        step = -d0 / dprime
        if abs(step) >= prev_step and prev_step < stall_threshold:
            break  # noise floor of the determinant reached
        e = e + step
        if abs(step) < tol:
            break
        prev_step = abs(step)
    else:
        raise ConvergenceError(
            f"Newton did not converge from seed {e0} in {max_iter} steps"
        )
    point = EnergyPoint(e, _continued_sheet(model, e, sheet))
    th = theta_for_f_in(model, point) if theta is None else theta
    residual = abs(det_jost(model, point, th, r_min, b, R, config))
    return SpectralPoint(
        energy=e,
        kind=_classify(model, e, sheet),
        sheet=sheet,
        det_residual=residual,
        det_derivative=dprime,
    )


def partial_widths(
    model: ChannelModel,
    pole_energy: complex,
    sheet,
    theta: float | None = None,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> tuple[float, tuple[float, ...]]:
    """Total width Gamma = -2 Im E_res and its per-channel split.

    The branching ratios come from the diagonal of M = f_out adj(f_in) at the
    pole, where the vanishing determinant has cancelled out: for two channels
    Gamma_1/Gamma_2 = |M_11 / M_22|, and Gamma_n = Gamma |M_nn| / sum |M_mm|
    generally, so the partial widths add up to Gamma by construction.
    """
    pole_energy = complex(pole_energy)
    if not pole_energy.imag < 0:
        raise ValidationError("a resonance pole requires Im E < 0")
    gamma = -2.0 * pole_energy.imag
    point = EnergyPoint(pole_energy, tuple(sheet))
    f_in, f_out = jost_pair(model, point, theta_in=theta,
                            r_min=r_min, b=b, R=R, config=config)
    m = f_out @ adjugate(f_in)
    diag = np.abs(np.diag(m))
    total = float(diag.sum())
    if not math.isfinite(total) or total <= 0.0:
        raise ScatteringError(
            f"width-ratio denominator vanishes at E = {pole_energy}"
        )
    partials = tuple(float(gamma * d / total) for d in diag)
    return gamma, partials


def find_spectrum(
    model: ChannelModel,
    bound_region: tuple[float, float, float, float] = BOUND_REGION,
    resonance_region: tuple[float, float, float, float] = RESONANCE_REGION,
    bound_grid: tuple[int, int] = BOUND_GRID,
    resonance_grid: tuple[int, int] = RESONANCE_GRID,
    dedupe_tol: float = DEDUPE_TOL,
    residual_threshold: float = 1e-4,
    theta: float | None = None,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> Spectrum:
    """Scan, refine, deduplicate and dress the spectrum of a model.

    Bound states are searched on the all-physical sheet with theta = 0;
    resonances on the all-unphysical sheet with the angle schedule (or the
    fixed ``theta`` when one is given).  Refined
    zeros closer than ``dedupe_tol`` merge; partial widths are attached to
    every resonance.  Sub-threshold resonances (Re E < 0) are reported on
    the all-unphysical sheet, which the search assumes for them.

    ``residual_threshold`` caps the energy distance implied by the final
    determinant residual, |det| / |det'|; converged simple zeros sit many
    orders below it while spurious minima do not.
    """
    nch = model.n_channels
    failures: list[str] = []

    def _refine_all(scan: ScanResult, sheet, th) -> list[SpectralPoint]:
        points: list[SpectralPoint] = []
        for seed in scan.candidates:
            try:
                sp = refine_zero(model, seed, sheet, theta=th,
                                 r_min=r_min, b=b, R=R, config=config)
            except ScatteringError as exc:
                failures.append(f"seed {seed}: {exc}")
                continue
            scale = max(abs(sp.det_derivative), 1e-3)
            if sp.det_residual / scale > residual_threshold:
                failures.append(
                    f"seed {seed}: residual {sp.det_residual:.2e} above threshold"
                )
                continue
            if any(abs(sp.energy - q.energy) < dedupe_tol for q in points):
                continue
            points.append(sp)
        return points

    bound_scan = scan_minima(model, bound_region, bound_grid,
                             physical_sheet(nch), theta=0.0,
                             r_min=r_min, b=b, R=R, config=config)
    failures.extend(f"scan {e}: {msg}" for e, msg in bound_scan.failures)
    bound_pts = [
        p for p in _refine_all(bound_scan, physical_sheet(nch), 0.0)
        if p.kind == "bound"
    ]
    bound_pts.sort(key=lambda p: p.energy.real)

    res_scan = scan_minima(model, resonance_region, resonance_grid,
                           unphysical_sheet(nch), theta=theta,
                           r_min=r_min, b=b, R=R, config=config)
    failures.extend(f"scan {e}: {msg}" for e, msg in res_scan.failures)
    res_pts = [
        p for p in _refine_all(res_scan, unphysical_sheet(nch), theta)
        if p.kind == "resonance"
    ]

    poles: list[ResonancePole] = []
    for p in sorted(res_pts, key=lambda q: q.energy.real):
        try:
            gamma, partials = partial_widths(model, p.energy, p.sheet,
                                             r_min=r_min, b=b, R=R, config=config)
        except ScatteringError as exc:
            failures.append(f"widths at {p.energy}: {exc}")
            gamma = -2.0 * p.energy.imag
            partials = (float("nan"),) * nch
        poles.append(ResonancePole(
            e_r=p.energy.real,
            gamma=gamma,
            partial_widths=partials,
            sheet=p.sheet,
            det_residual=p.det_residual,
        ))

    return Spectrum(bound=tuple(bound_pts), resonances=tuple(poles),
                    failures=tuple(failures))
