import math

import numpy as np
import pytest

import reference
from jostscatter.errors import ConvergenceError
from jostscatter.model import (
    ChannelModel,
    EnergyPoint,
    PotentialTerm,
    physical_sheet,
    unphysical_sheet,
)
from jostscatter.spectral import (
    det_jost,
    find_spectrum,
    partial_widths,
    refine_zero,
    scan_minima,
)

RIM = physical_sheet(2)
UNPHYS = unphysical_sheet(2)


def test_det_free_is_one(free):
    assert det_jost(free, EnergyPoint(5.0, RIM), theta=0.0) == pytest.approx(1.0, abs=1e-14)
    assert det_jost(free, EnergyPoint(3.0 - 2.0j, UNPHYS)) == pytest.approx(1.0, abs=1e-12)


def test_det_vanishes_at_bound_state(noro):
    sp = refine_zero(noro, -0.065258, RIM)
    assert abs(sp.energy - (-0.065258)) < 1e-5
    assert sp.det_residual < 1e-8 * (1.0 + abs(sp.det_derivative))


def test_det_vanishes_at_second_resonance(noro):
    sp = refine_zero(noro, 7.2412 - 0.756j, UNPHYS, theta=0.2 * math.pi)
    assert abs(sp.energy - (7.241200 - 0.755956j)) < 1e-5
    assert sp.det_residual < 1e-8 * (1.0 + abs(sp.det_derivative))


def test_refine_bound_state_example(noro):
    sp = refine_zero(noro, -2.31, RIM)
    assert abs(sp.energy - (-2.314391)) < 1e-6
    assert sp.kind == "bound"
    assert abs(sp.det_derivative) > 1e-6  # simple zero


def test_refine_first_resonance_example(noro):
    sp = refine_zero(noro, 4.77 - 0.001j, UNPHYS)
    assert abs(sp.energy - (4.768197 - 0.000710j)) < 1e-6
    assert sp.kind == "resonance"
    assert abs(sp.det_derivative) > 1e-6


def test_refine_flat_determinant_rejected(free):
    with pytest.raises(ConvergenceError, match="derivative"):
        refine_zero(free, 3.0 - 0.5j, UNPHYS)


def test_refined_pole_theta_independent(noro):
    s1 = refine_zero(noro, 7.24 - 0.76j, UNPHYS, theta=0.10 * math.pi)
    s2 = refine_zero(noro, 7.24 - 0.76j, UNPHYS, theta=0.15 * math.pi)
    assert abs(s1.energy - s2.energy) < 1e-8


def test_scan_bound_states_example(noro):
    scan = scan_minima(noro, (-3.0, 0.0, -1e-6, 1e-6), (60, 3), RIM, theta=0.0)
    refined = set()
    for seed in scan.candidates:
        sp = refine_zero(noro, seed, RIM)
        refined.add(round(sp.energy.real, 5))
    assert refined == {round(e, 5) for e in reference.BOUND_STATES}


def test_scan_free_model_empty(free):
    scan = scan_minima(free, (-3.0, -0.1, -1e-6, 1e-6), (25, 3), RIM, theta=0.0)
    assert scan.candidates == ()


def test_scan_resonance_region_example(noro):
    scan = scan_minima(noro, (0.5, 9.0, -8.0, -1e-4), (30, 16), UNPHYS)
    for e_r, gamma, _, _ in reference.RESONANCES[:3]:
        target = complex(e_r, -gamma / 2.0)
        assert min(abs(c - target) for c in scan.candidates) < 0.7


def test_partial_widths_first_two(noro):
    for k in (1, 2):
        e_r, gamma_ref, g1_ref, g2_ref = reference.RESONANCES[k - 1]
        sp = refine_zero(noro, reference.POLE_SEEDS[k], UNPHYS)
        gamma, (g1, g2) = partial_widths(noro, sp.energy, sp.sheet)
        assert gamma == pytest.approx(gamma_ref, abs=1e-5)
        assert g1 == pytest.approx(g1_ref, abs=1e-6)
        assert g2 == pytest.approx(g2_ref, abs=1e-6)
        assert g1 > 0 and g2 > 0
        assert g1 + g2 == pytest.approx(gamma, rel=1e-12)


def test_partial_widths_symmetric_decoupled_model():
    # identical uncoupled channels share every zero; channel exchange forces
    # equal branching exactly
    barrier = np.array([[7.5]])
    single = ChannelModel(masses=(1.0,), thresholds=(0.0,),
                          terms=(PotentialTerm(coeff=barrier, power=2, decay=1.0),),
                          ell=0)
    sp = refine_zero(single, 3.4 - 0.02j, (-1,))
    double = ChannelModel(
        masses=(1.0, 1.0), thresholds=(0.0, 0.0),
        terms=(PotentialTerm(coeff=np.diag([7.5, 7.5]), power=2, decay=1.0),),
        ell=0)
    gamma, (g1, g2) = partial_widths(double, sp.energy, (-1, -1))
    assert g1 == g2
    assert g1 + g2 == pytest.approx(gamma, rel=1e-12)


def test_find_spectrum_free_empty(free):
    found = find_spectrum(
        free,
        bound_region=(-2.0, -0.2, -1e-6, 1e-6),
        resonance_region=(0.5, 6.0, -4.0, -1e-3),
        bound_grid=(20, 3),
        resonance_grid=(12, 8),
    )
    assert found.bound == () and found.resonances == ()


def test_find_spectrum_subthreshold_band(noro):
    # extending the search window below Re E = 0 picks up the next members
    # of the resonance string
    found = find_spectrum(
        noro,
        bound_region=(-3.0, -0.01, -1e-6, 1e-6),
        bound_grid=(40, 3),
        resonance_region=(-10.0, 0.5, -36.0, -24.0),
        resonance_grid=(15, 9),
    )
    found = [p for p in found.resonances if p.e_r < 0]
    for e_r_ref, gamma_ref in reference.SUBTHRESHOLD:
        match = min(found, key=lambda p: abs(p.e_r - e_r_ref))
        assert abs(match.e_r - e_r_ref) < 1e-4
        assert abs(match.gamma - gamma_ref) < 1e-4
        assert match.sheet == (-1, -1)
