import cmath

import numpy as np
import pytest

from jostscatter import free_model, noro_taylor, physical_sheet, unphysical_sheet
from jostscatter.jost import adjugate, jost_pair
from jostscatter.mittag import build_expansion, default_contour
from jostscatter.model import EnergyPoint
from jostscatter.spectral import find_spectrum


@pytest.fixture(scope="session")
def noro():
    return noro_taylor()


@pytest.fixture(scope="session")
def free():
    return free_model()


@pytest.fixture(scope="session")
def noro_spectrum(noro):
    """Full default spectrum of the benchmark model (shared, ~40 s)."""
    return find_spectrum(noro)


@pytest.fixture(scope="session")
def string_poles(noro_spectrum):
    """The nine contour-enclosed resonances in string order (narrowest first)."""
    contour = default_contour()
    poles = [p for p in noro_spectrum.resonances
             if contour.contains(p.energy, margin=1e-9)]
    return sorted(poles, key=lambda p: p.gamma)


@pytest.fixture(scope="session")
def standard_expansion(noro, string_poles):
    """Pole expansion over the standard triangle contour (shared, ~1 min)."""
    return build_expansion(noro, string_poles)


def circle_residue(model, center, radius=1e-3, nodes=24):
    """Independent residue oracle: trapezoid quadrature of S on a small circle.

    On a circle the trapezoid rule integrates the Laurent series of S around
    the enclosed simple pole essentially exactly, so the only error is that
    of the sampled S values themselves.  Points above the real axis use the
    all-physical sheet (the patched continuation), below the all-unphysical.
    """
    n = model.n_channels
    acc = np.zeros((n, n), dtype=complex)
    for j in range(nodes):
        z = center + radius * cmath.exp(2j * cmath.pi * j / nodes)
        sheet = unphysical_sheet(n) if z.imag < 0 else physical_sheet(n)
        f_in, f_out = jost_pair(model, EnergyPoint(z, sheet))
        s = f_out @ adjugate(f_in) / np.linalg.det(f_in)
        acc += s * (z - center)
    return acc / nodes
