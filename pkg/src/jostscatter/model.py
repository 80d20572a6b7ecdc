"""Definition of the N-channel scattering problem.

A :class:`ChannelModel` holds the reduced masses, threshold energies and an
analytic interaction matrix built from terms ``coeff * r**p * exp(-decay*r)``.
That term shape is entire in ``r`` and vanishes faster than ``1/r**2`` along
any ray ``r = z*exp(i*theta)`` with ``|theta| < pi/2``, which is what the
complex-rotated radial integration requires; arbitrary callables are
deliberately not accepted.

Energies live on a 2**N-sheeted Riemann surface indexed by the signs of the
imaginary parts of the channel momenta ``k_n = sqrt(2*mu_n/hbar**2*(E-E_n))``.
A sheet is selected with a tuple of +1/-1 per channel (+1: Im k_n >= 0, the
physical side; -1: the unphysical side).
"""

from __future__ import annotations

import cmath
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BranchPointError, ValidationError

PHYSICAL = 1
UNPHYSICAL = -1


@dataclass(frozen=True, eq=False)
class PotentialTerm:
    """One analytic interaction term ``coeff * r**power * exp(-decay*r)``.

    ``coeff`` is a real symmetric N x N matrix in energy units; ``decay > 0``
    guarantees integrability at the origin and super-1/r**2 falloff.
    """

    coeff: np.ndarray
    power: int
    decay: float

    def __post_init__(self):
        c = np.asarray(self.coeff, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValidationError("term coefficient must be a square matrix")
        if not np.allclose(c, c.T, rtol=0.0, atol=1e-12):
            raise ValidationError("term coefficient matrix must be symmetric")
        if self.power != int(self.power) or self.power < 0:
            raise ValidationError("term power must be a non-negative integer")
        if not self.decay > 0:
            raise ValidationError("term decay rate must be positive")
        object.__setattr__(self, "coeff", c)
        object.__setattr__(self, "power", int(self.power))
        object.__setattr__(self, "decay", float(self.decay))

    def __call__(self, r: complex) -> np.ndarray:
        """Evaluate the term at (possibly complex) radius r."""
        return self.coeff * (r**self.power * cmath.exp(-self.decay * r))


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Masses, thresholds and interaction terms of an N-channel problem."""

    masses: tuple[float, ...]
    thresholds: tuple[float, ...]
    terms: tuple[PotentialTerm, ...]
    ell: int = 0
    hbar: float = 1.0

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        thresholds = tuple(float(e) for e in self.thresholds)
        if len(masses) != len(thresholds) or not masses:
            raise ValidationError("masses and thresholds must have equal, nonzero length")
        if any(m <= 0 for m in masses):
            raise ValidationError("reduced masses must be positive")
        if any(b < a for a, b in zip(thresholds, thresholds[1:])):
            raise ValidationError("thresholds must be non-decreasing")
        if not self.hbar > 0:
            raise ValidationError("hbar must be positive")
        if self.ell != int(self.ell) or self.ell < 0:
            raise ValidationError("ell must be a non-negative integer")
        for t in self.terms:
            if t.coeff.shape[0] != len(masses):
                raise ValidationError("term dimension does not match channel count")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "thresholds", thresholds)
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "ell", int(self.ell))
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def n_channels(self) -> int:
        return len(self.masses)

    @property
    def mass_scale(self) -> np.ndarray:
        """Row factors 2*mu_n/hbar**2 turning U into the reduced potential V."""
        return 2.0 * np.asarray(self.masses) / self.hbar**2

    def min_decay(self) -> float:
        """Slowest exponential falloff among the terms (inf if free)."""
        return min((t.decay for t in self.terms), default=float("inf"))


def physical_sheet(n: int) -> tuple[int, ...]:
    """Sheet selector with Im k_n >= 0 in every channel."""
    return (PHYSICAL,) * n


def unphysical_sheet(n: int) -> tuple[int, ...]:
    """Sheet selector with Im k_n < 0 in every channel (resonance side)."""
    return (UNPHYSICAL,) * n


def _check_sheet(sheet, n: int) -> tuple[int, ...]:
    sheet = tuple(int(s) for s in sheet)
    if len(sheet) != n or any(s not in (PHYSICAL, UNPHYSICAL) for s in sheet):
        raise ValidationError(f"sheet selector must be {n} values of +1/-1, got {sheet!r}")
    return sheet


@dataclass(frozen=True)
class EnergyPoint:
    """A complex energy together with its Riemann-sheet selector."""

    energy: complex
    sheet: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "energy", complex(self.energy))
        object.__setattr__(self, "sheet", tuple(int(s) for s in self.sheet))


def channel_momenta(model: ChannelModel, point: EnergyPoint) -> np.ndarray:
    """Diagonal of the channel-momentum matrix K on the selected sheet.

    k_n = sqrt(2*mu_n/hbar**2 * (E - E_n)) with the square-root branch chosen
    so that sign(Im k_n) matches the sheet selector.  On the real axis above
    a threshold both rims give the same real positive k_n (the physical
    scattering value at Im E -> 0+); below a threshold the physical sheet
    gives +i|k_n|.
    """
    sheet = _check_sheet(point.sheet, model.n_channels)
    e = complex(point.energy)
    scale = model.mass_scale
    k = np.empty(model.n_channels, dtype=complex)
    for n in range(model.n_channels):
        de = e - model.thresholds[n]
        if de == 0:
            raise BranchPointError(
                f"energy {e} sits exactly on the threshold of channel {n + 1}"
            )
        w = cmath.sqrt(scale[n] * de)
        if w.real < 0 or (w.real == 0 and w.imag < 0):
            w = -w
        if w.imag == 0:
            k[n] = w  # open channel at real E: rims coincide, k real > 0
        elif (w.imag > 0) == (sheet[n] == PHYSICAL):
            k[n] = w
        else:
            k[n] = -w
    return k


def potential_matrix(model: ChannelModel, r: complex) -> np.ndarray:
    """Reduced potential V(r) with V_nn' = (2*mu_n/hbar**2) * U_nn'(r).

    The row scaling makes V generally non-symmetric when the masses differ.
    Entire function of r for the exponential term shape.
    """
    n = model.n_channels
    u = np.zeros((n, n), dtype=complex)
    for t in model.terms:
        u += t(complex(r))
    return model.mass_scale[:, None] * u


def noro_taylor() -> ChannelModel:
    """The two-channel benchmark model: U(r) = C * r**2 * exp(-r).

    C = [[-1.0, -7.5], [-7.5, 7.5]], unit masses, hbar = 1, thresholds 0 and
    0.1, s-wave.  An attractive well in channel 1, a barrier in channel 2 and
    strong coupling produce four bound states and a string of overlapping
    resonances.
    """
    coeff = np.array([[-1.0, -7.5], [-7.5, 7.5]])
    return ChannelModel(
        masses=(1.0, 1.0),
        thresholds=(0.0, 0.1),
        terms=(PotentialTerm(coeff=coeff, power=2, decay=1.0),),
        ell=0,
        hbar=1.0,
    )


def free_model(n: int = 2, thresholds=(0.0, 0.1)) -> ChannelModel:
    """A coupling-free model (V = 0) used by identity tests."""
    return ChannelModel(
        masses=(1.0,) * n,
        thresholds=tuple(thresholds)[:n],
        terms=(),
        ell=0,
        hbar=1.0,
    )


def model_to_dict(model: ChannelModel) -> dict:
    return {
        "n_channels": model.n_channels,
        "masses": list(model.masses),
        "thresholds": list(model.thresholds),
        "hbar": model.hbar,
        "ell": model.ell,
        "terms": [
            {"coeff": t.coeff.tolist(), "power": t.power, "decay": t.decay}
            for t in model.terms
        ],
    }


def model_from_dict(data: dict) -> ChannelModel:
    try:
        n = int(data["n_channels"])
        masses = tuple(float(m) for m in data["masses"])
        thresholds = tuple(float(e) for e in data["thresholds"])
        terms = tuple(
            PotentialTerm(
                coeff=np.asarray(t["coeff"], dtype=float),
                power=int(t["power"]),
                decay=float(t["decay"]),
            )
            for t in data.get("terms", [])
        )
        model = ChannelModel(
            masses=masses,
            thresholds=thresholds,
            terms=terms,
            ell=int(data.get("ell", 0)),
            hbar=float(data.get("hbar", 1.0)),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model definition: {exc}") from exc
    if model.n_channels != n:
        raise ValidationError(
            f"n_channels = {n} does not match {model.n_channels} masses"
        )
    return model


def load_model(path) -> ChannelModel:
    """Read a model-definition JSON file."""
    with open(Path(path), "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_model(model: ChannelModel, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
