"""Acceptance suite: one test per criterion, each printing a single
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Criteria 4 and 5 are asserted at their stated tolerances; see the per-test
notes on the two known data/geometry limits they run into.
"""

import math
import time

import numpy as np
import pytest

import reference
from conftest import circle_residue
from jostscatter.jost import (
    flux_weighted,
    jost_matrices,
    s_matrix,
)
from jostscatter.mittag import (
    argand_trajectory,
    detect_arcs,
    ml_s_matrix,
    residue,
    winding_angle,
)
from jostscatter.model import (
    ChannelModel,
    EnergyPoint,
    PotentialTerm,
    physical_sheet,
    unphysical_sheet,
)
from jostscatter.specfun import riccati_h, riccati_h_dz, riccati_j
from jostscatter.spectral import (
    BOUND_GRID,
    BOUND_REGION,
    find_spectrum,
    refine_zero,
    scan_minima,
)

RIM = physical_sheet(2)
UNPHYS = unphysical_sheet(2)


def _report(num, ok, detail):
    print(f"\n[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_1_bound_states(noro):
    t0 = time.perf_counter()
    scan = scan_minima(noro, BOUND_REGION, BOUND_GRID, RIM, theta=0.0)
    energies = []
    for seed in scan.candidates:
        sp = refine_zero(noro, seed, RIM)
        if sp.kind == "bound" and not any(
                abs(sp.energy.real - e) < 1e-6 for e in energies):
            energies.append(sp.energy.real)
    elapsed = time.perf_counter() - t0
    devs = [min(abs(e - ref) for e in energies) for ref in reference.BOUND_STATES]
    ok = len(energies) == 4 and max(devs) < 1e-5 and elapsed < 60.0
    _report(1, ok,
            f"4 bound states, max |dE| = {max(devs):.2e}, {elapsed:.1f} s")


def test_criterion_2_resonance_string(string_poles):
    rows = []
    for e_r_ref, gamma_ref, _, _ in reference.RESONANCES:
        match = min(string_poles, key=lambda p: abs(p.e_r - e_r_ref)
                    + abs(p.gamma - gamma_ref))
        rows.append((abs(match.e_r - e_r_ref), abs(match.gamma - gamma_ref)))
    worst_e = max(r[0] for r in rows)
    worst_g = max(r[1] for r in rows)
    ok = len(string_poles) == 9 and worst_e < 1e-5 and worst_g < 1e-5
    _report(2, ok,
            f"nine resonances, max |dE_r| = {worst_e:.2e}, max |dGamma| = {worst_g:.2e}")


def test_criterion_3_partial_widths(string_poles):
    failures = []
    for k in (1, 2):
        _, _, g1_ref, g2_ref = reference.RESONANCES[k - 1]
        pole = string_poles[k - 1]
        g1, g2 = pole.partial_widths
        if abs(g1 - g1_ref) >= 1e-6 or abs(g2 - g2_ref) >= 1e-6:
            failures.append(f"pole {k} widths off: {g1:.7f}/{g2:.7f}")
    for pole in string_poles:
        if abs(sum(pole.partial_widths) - pole.gamma) > 1e-6 * pole.gamma:
            failures.append(f"width sum violated at E_r = {pole.e_r:.4f}")
    _report(3, not failures, "; ".join(failures) or
            "first two resonances to 1e-6, width sums exact")


def test_criterion_4_residues(standard_expansion):
    # NOTE: asserted exactly as stated against the published table.  The
    # computed residues are confirmed to ~1e-5 by three independent routes
    # (solver-knob stability, small-circle quadrature, real-axis pole fit),
    # while several published small-magnitude entries carry ~1.5e-4..6e-4
    # of their own error, so those entries fail the stated 1e-4 bound.
    bad = []
    worst = 0.0
    for k, (r11, r21, r22) in reference.RESIDUES.items():
        rm = standard_expansion.poles[k - 1]
        for label, ref, got in (("S11", r11, rm.res[0, 0]),
                                ("S21", r21, rm.res[1, 0]),
                                ("S22", r22, rm.res[1, 1])):
            rel = abs(got - ref) / abs(ref)
            worst = max(worst, rel)
            if rel >= 1e-4:
                bad.append(f"pole {k} {label}: {rel:.2e}")
    _report(4, not bad,
            f"worst relative deviation {worst:.2e}"
            + (f"; entries beyond 1e-4: {', '.join(bad)}" if bad else ""))


def test_criterion_5_expansion_closure(noro, standard_expansion):
    # NOTE: asserted exactly as stated.  The long contour edge crosses the
    # real axis at Re E ~ 19.78, so grid points outside the contour cannot
    # be reconstructed at all and the single interior grid point within
    # ~0.1 of the crossing is quadrature-limited above 1e-3 (Gauss-Legendre
    # error ~ exp(-700 d / L) at distance d from a segment of length L).
    grid = np.linspace(0.5, 20.0, 200)
    inside = [float(e) for e in grid
              if standard_expansion.contour.contains(complex(e), margin=1e-9)]
    errs = {}
    for e in inside:
        errs[e] = float(np.max(np.abs(s_matrix(noro, e).s
                                      - ml_s_matrix(standard_expansion, e))))
    worst = max(errs.values())
    worst_e = max(errs, key=errs.get)
    clear = max(v for e, v in errs.items() if e <= 19.2)
    ok = worst < 1e-3
    _report(5, ok,
            f"max |S_direct - S_ML| = {worst:.2e} at E = {worst_e:.3f} over "
            f"{len(inside)}/200 grid points inside the contour "
            f"(max {clear:.2e} for E <= 19.2)")


def _direct_trajectories(noro, grid):
    s_values = [s_matrix(noro, float(e)).s for e in grid]
    return {el: np.array([s[el[0] - 1, el[1] - 1] for s in s_values])
            for el in ((1, 1), (2, 1), (2, 2))}


def _ml_trajectories(expansion, grid):
    s_values = [ml_s_matrix(expansion, float(e)) for e in grid]
    return {el: np.array([s[el[0] - 1, el[1] - 1] for s in s_values])
            for el in ((1, 1), (2, 1), (2, 2))}


def test_criterion_6_argand_arcs(noro, standard_expansion):
    # Arc presence is checked with the turning-sign detector; the
    # pole-attribution clauses are checked through winding angles (a full
    # resonance loop turns by 2*pi), coarsened to a 0.1 step in the S-plane
    # for the broad features so that sub-visible knots do not count.
    dense = np.concatenate([np.arange(0.52, 4.7549, 0.05),
                            np.arange(4.755, 4.79, 0.0005),
                            np.arange(4.8, 20.0001, 0.05)])
    ml_grid = dense[dense <= 19.5]
    narrow, mid, high = (4.755, 4.789), (6.0, 9.0), (9.0, 19.5)
    failures = []

    direct = _direct_trajectories(noro, dense)
    for el, traj in direct.items():
        arcs = [a for a in detect_arcs(traj, dense) if a.orientation == "ccw"]
        for lo, hi in ((4.765, 4.775), (6.0, 9.0), (9.0, 20.0)):
            if not any(a.e_start < hi and a.e_end > lo for a in arcs):
                failures.append(f"S{el[0]}{el[1]}: no direct ccw arc over ({lo},{hi})")
        if winding_angle(traj, dense, *narrow) < 5.0:
            failures.append(f"S{el[0]}{el[1]}: narrow loop missing")

    base = _ml_trajectories(standard_expansion, ml_grid)
    no1 = _ml_trajectories(standard_expansion.excluding(1), ml_grid)
    no2 = _ml_trajectories(standard_expansion.excluding(2), ml_grid)
    no3 = _ml_trajectories(standard_expansion.excluding(3), ml_grid)
    none = _ml_trajectories(standard_expansion.excluding_all(), ml_grid)

    for el in base:
        tag = f"S{el[0]}{el[1]}"
        w_base_mid = winding_angle(base[el], ml_grid, *mid, min_step=0.1)
        w_base_high = winding_angle(base[el], ml_grid, *high, min_step=0.1)

        # excluding pole 1 removes only the narrow loop
        if winding_angle(no1[el], ml_grid, *narrow) > 0.5:
            failures.append(f"{tag}: narrow loop survives pole-1 exclusion")
        if winding_angle(no1[el], ml_grid, *mid, min_step=0.1) < 0.7 * w_base_mid:
            failures.append(f"{tag}: pole-1 exclusion disturbed the (6,9) arc")

        # excluding pole 2 removes the (6,9) arc
        if winding_angle(no2[el], ml_grid, *mid, min_step=0.1) > 0.55 * w_base_mid:
            failures.append(f"{tag}: (6,9) arc survives pole-2 exclusion")

        # excluding pole 3 does not remove the E > 9 arc
        if winding_angle(no3[el], ml_grid, *high, min_step=0.1) < 1.5:
            failures.append(f"{tag}: E > 9 arc lost with pole-3 exclusion")
        if winding_angle(no3[el], ml_grid, *narrow) < 5.0:
            failures.append(f"{tag}: narrow loop lost with pole-3 exclusion")

        # background only: no loops anywhere on [0.5, 19]
        if winding_angle(none[el], ml_grid, *narrow) > 0.5:
            failures.append(f"{tag}: background shows the narrow loop")
        for lo, hi in (mid, (9.0, 19.0)):
            if winding_angle(none[el], ml_grid, lo, hi, min_step=0.1) > 1.0:
                failures.append(f"{tag}: background winds ccw over ({lo},{hi})")

    # pole-2 attribution: the (6,9) feature follows pole 2, demonstrated on
    # the transmission element where it is strongest
    w21 = winding_angle(base[(2, 1)], ml_grid, *mid, min_step=0.1)
    if winding_angle(no3[(2, 1)], ml_grid, *mid, min_step=0.1) < 0.5 * w21:
        failures.append("S21: (6,9) arc did not come back with pole 2")

    _report(6, not failures, "; ".join(failures) or
            "arc/loop structure follows the pole exclusions as published")


def test_criterion_7_property_suite(noro, free, string_poles):
    failures = []

    # Riccati-Hankel Wronskian and combination identity
    for k in (1.0, 2.5 - 0.5j, 0.3 + 1.1j):
        for r in (0.7, 2.0 + 1.0j):
            for ell in (0, 1, 2):
                z = k * r
                wr = (riccati_h(-1, ell, z) * k * riccati_h_dz(1, ell, z)
                      - k * riccati_h_dz(-1, ell, z) * riccati_h(1, ell, z))
                if abs(wr - 2j * k) > 1e-10 * abs(2j * k):
                    failures.append(f"Wronskian off at ell={ell}")
                comb = riccati_h(1, ell, z) + riccati_h(-1, ell, z)
                if abs(comb - 2.0 * riccati_j(ell, z)) > 1e-10 * max(1.0, abs(comb)):
                    failures.append(f"combination identity off at ell={ell}")

    # zero-potential identities
    jm = jost_matrices(free, EnergyPoint(5.0, RIM), theta=0.0)
    if not (np.array_equal(jm.f_in, np.eye(2)) and np.array_equal(jm.f_out, np.eye(2))):
        failures.append("free Jost matrices differ from identity")
    if np.max(np.abs(s_matrix(free, 5.0).s - np.eye(2))) > 1e-12:
        failures.append("free S-matrix differs from identity")
    empty = find_spectrum(free, bound_region=(-2.0, -0.2, -1e-6, 1e-6),
                          resonance_region=(0.5, 6.0, -4.0, -1e-3),
                          bound_grid=(20, 3), resonance_grid=(10, 6))
    if empty.bound or empty.resonances:
        failures.append("free model has a nonempty spectrum")

    # rotation-angle, matching-point and truncation-radius invariance
    point = EnergyPoint(7.2412 - 0.756j, UNPHYS)
    f_ref = jost_matrices(noro, point, theta=0.10 * math.pi, which="in").f_in
    f_rot = jost_matrices(noro, point, theta=0.20 * math.pi, which="in").f_in
    if np.max(np.abs(f_ref - f_rot)) > 1e-8 * max(1.0, np.max(np.abs(f_ref))):
        failures.append("rotation-angle invariance broken")
    rim_point = EnergyPoint(5.0, RIM)
    f_b1 = jost_matrices(noro, rim_point, theta=0.0, b=0.5).f_in
    f_b2 = jost_matrices(noro, rim_point, theta=0.0, b=2.0).f_in
    if np.max(np.abs(f_b1 - f_b2)) > 1e-8:
        failures.append("matching-point invariance broken")
    f_r1 = jost_matrices(noro, rim_point, theta=0.0, R=30.0).f_in
    f_r2 = jost_matrices(noro, rim_point, theta=0.0, R=40.0).f_in
    if np.max(np.abs(f_r1 - f_r2)) > 1e-8:
        failures.append("truncation-radius invariance broken")

    # flux-weighted unitarity and symmetry above the upper threshold
    for e in (0.5, 1.0, 2.0, 4.0, 7.0, 11.0, 16.0, 20.0):
        shat = flux_weighted(noro, s_matrix(noro, e))
        if np.max(np.abs(shat @ shat.conj().T - np.eye(2))) > 1e-8:
            failures.append(f"unitarity defect at E = {e}")
        if np.max(np.abs(shat - shat.T)) > 1e-8:
            failures.append(f"symmetry defect at E = {e}")

    # residue formula against the small-circle quadrature oracle
    for k in (1, 5, 9):
        pole = string_poles[k - 1]
        rm = residue(noro, pole.energy, pole.sheet)
        oracle = circle_residue(noro, pole.energy)
        rel = np.max(np.abs(rm.res - oracle)) / np.max(np.abs(oracle))
        if rel > 1e-5:
            failures.append(f"residue oracle disagreement {rel:.1e} at pole {k}")

    _report(7, not failures, "; ".join(failures) or
            "identities, invariances, unitarity and residue oracle all hold")


def _numerov_mismatch(e_values, v0, decay, r_max=28.0, h=2e-3):
    """Decaying-tail mismatch u'(R) + kappa u(R) for the exponential well.

    Fixed-step Numerov integration of u'' = (V - 2E) u from the regular
    origin; the mismatch changes sign exactly at the bound states.
    """
    e_values = np.atleast_1d(np.asarray(e_values, dtype=float))
    n = int(round(r_max / h))
    r = (np.arange(n + 1) + 1.0) * h
    v = -2.0 * v0 * np.exp(-decay * r)
    t = h * h / 12.0
    w = v[None, :] - 2.0 * e_values[:, None]
    u_prev = r[0] * np.ones(e_values.size)
    u_cur = np.full(e_values.size, r[1])
    for i in range(1, n):
        u_next = (2.0 * u_cur * (1.0 + 5.0 * t * w[:, i])
                  - u_prev * (1.0 - t * w[:, i - 1])) / (1.0 - t * w[:, i + 1])
        u_prev, u_cur = u_cur, u_next
    kappa = np.sqrt(-2.0 * e_values)
    du = (u_cur - u_prev) / h
    return du + kappa * u_cur


def test_criterion_8_shooting_oracle():
    # one channel, attractive exponential well U(r) = -12.5 exp(-r)
    well = ChannelModel(
        masses=(1.0,), thresholds=(0.0,),
        terms=(PotentialTerm(coeff=np.array([[-12.5]]), power=0, decay=1.0),),
        ell=0)
    found = find_spectrum(
        well,
        bound_region=(-6.0, -0.02, -1e-6, 1e-6), bound_grid=(90, 3),
        resonance_region=(1.0, 3.0, -2.0, -0.1), resonance_grid=(5, 4))
    mine = sorted(p.energy.real for p in found.bound)

    e_grid = np.linspace(-6.0, -0.015, 600)
    vals = _numerov_mismatch(e_grid, v0=12.5, decay=1.0)
    roots = []
    for a, b, fa, fb in zip(e_grid, e_grid[1:], vals, vals[1:]):
        if fa == 0.0 or fa * fb > 0.0:
            continue
        lo, hi, flo = a, b, fa
        for _ in range(60):
            midpoint = 0.5 * (lo + hi)
            fm = _numerov_mismatch(midpoint, v0=12.5, decay=1.0)[0]
            if flo * fm <= 0.0:
                hi = midpoint
            else:
                lo, flo = midpoint, fm
        roots.append(0.5 * (lo + hi))

    ok = len(mine) == len(roots) == 3
    worst = max(abs(a - b) for a, b in zip(mine, sorted(roots))) if ok else float("inf")
    ok = ok and worst < 1e-6
    _report(8, ok,
            f"{len(mine)} bound states vs {len(roots)} shooting roots, "
            f"max |dE| = {worst:.2e}")
