"""Pole expansion of the S-matrix: residues at resonance poles, a Gauss-
Legendre contour background, reconstruction with selectable pole exclusion,
and Argand-trajectory arc analysis.

For energies E inside a positively oriented contour enclosing N simple
S-matrix poles,

    S(E) = sum_j Res[S(E_j)] / (E - E_j) + (1/2 pi i) * Integral S(z)/(z - E) dz,

exactly.  Omitting pole terms from the sum shows what each resonance
contributes; the contour integral absorbs everything else (background and
all poles left outside).
"""

from __future__ import annotations

import cmath
import json
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ScatteringError, ValidationError
from .jost import (
    B_DEFAULT,
    R_DEFAULT,
    R_MIN_DEFAULT,
    adjugate,
    det_central_difference,
    f_in_difference_pair,
    jost_pair,
    s_matrix,
    s_matrix_at,
    theta_for_f_in,
)
from .model import ChannelModel, EnergyPoint, physical_sheet, unphysical_sheet
from .odeint import DEFAULT_CONFIG, IntegratorConfig
from .spectral import ResonancePole

CACHE_FORMAT = "jost-scatter-ml-cache"
CACHE_VERSION = 1

DEFAULT_CONTOUR_VERTICES = (0.5 + 0.5j, 0.5 - 30.0j, 20.1 + 0.5j)
DEFAULT_NODES_PER_SEGMENT = 175
DEFAULT_CONTOUR_THETA = 0.3 * math.pi


def _polygon_area2(verts) -> float:
    s = 0.0
    m = len(verts)
    for i in range(m):
        a, b = verts[i], verts[(i + 1) % m]
        s += a.real * b.imag - b.real * a.imag
    return s


def _point_in_polygon(p: complex, verts) -> bool:
    inside = False
    m = len(verts)
    for i in range(m):
        a, b = verts[i], verts[(i + 1) % m]
        if (a.imag > p.imag) != (b.imag > p.imag):
            x = a.real + (p.imag - a.imag) * (b.real - a.real) / (b.imag - a.imag)
            if p.real < x:
                inside = not inside
    return inside


def _dist_to_edges(p: complex, verts) -> float:
    best = math.inf
    m = len(verts)
    for i in range(m):
        a, b = verts[i], verts[(i + 1) % m]
        d = b - a
        t = ((p - a) * d.conjugate()).real / abs(d) ** 2
        t = min(1.0, max(0.0, t))
        best = min(best, abs(p - (a + t * d)))
    return best


def _segment_crosses_ray(a: complex, b: complex, origin: complex, direction: complex) -> bool:
    """Does segment a->b intersect the ray origin + u*direction, u >= 0?"""
    d = b - a
    det = d.real * (-direction.imag) - d.imag * (-direction.real)
    if abs(det) < 1e-14 * max(abs(d), 1.0):
        return False  # parallel; grazing overlap is excluded by validation margins
    rhs = origin - a
    s = (rhs.real * (-direction.imag) - rhs.imag * (-direction.real)) / det
    u = (d.real * rhs.imag - d.imag * rhs.real) / det
    return 0.0 <= s <= 1.0 and u >= 0.0


@dataclass(frozen=True)
class Contour:
    """Closed positively oriented polygon for the background integral."""

    vertices: tuple[complex, ...]
    nodes_per_segment: int = DEFAULT_NODES_PER_SEGMENT
    theta: float = DEFAULT_CONTOUR_THETA

    def __post_init__(self):
        verts = tuple(complex(v) for v in self.vertices)
        if len(verts) < 3:
            raise ValidationError("a contour polygon needs at least three vertices")
        for i in range(len(verts)):
            if verts[i] == verts[(i + 1) % len(verts)]:
                raise ValidationError("contour vertices must be distinct")
        if _polygon_area2(verts) <= 0.0:
            raise ValidationError("contour must be positively oriented (counter-clockwise)")
        if self.nodes_per_segment < 1:
            raise ValidationError("nodes_per_segment must be positive")
        if not 0.0 <= self.theta < 0.5 * math.pi:
            raise ValidationError("contour theta must lie in [0, pi/2)")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "nodes_per_segment", int(self.nodes_per_segment))
        object.__setattr__(self, "theta", float(self.theta))

    @property
    def edges(self):
        v = self.vertices
        return tuple((v[i], v[(i + 1) % len(v)]) for i in range(len(v)))

    def contains(self, e: complex, margin: float = 0.0) -> bool:
        e = complex(e)
        if not _point_in_polygon(e, self.vertices):
            return False
        return _dist_to_edges(e, self.vertices) > margin

    def validate_for_model(self, model: ChannelModel) -> None:
        """No threshold branch point enclosed; no edge across a rotated cut."""
        direction = cmath.exp(-2j * self.theta)
        for i, e_n in enumerate(model.thresholds):
            if _point_in_polygon(complex(e_n), self.vertices):
                raise ValidationError(
                    f"contour encloses the branch point of channel {i + 1} at E = {e_n}"
                )
            for a, b in self.edges:
                if _segment_crosses_ray(a, b, complex(e_n), direction):
                    raise ValidationError(
                        f"contour edge {a} -> {b} crosses the unitary cut of "
                        f"channel {i + 1} rotated by 2*theta"
                    )


def default_contour(nodes_per_segment: int = DEFAULT_NODES_PER_SEGMENT,
                    theta: float = DEFAULT_CONTOUR_THETA) -> Contour:
    """Triangle (0.5+0.5i, 0.5-30i, 20.1+0.5i) enclosing the resonance string."""
    return Contour(DEFAULT_CONTOUR_VERTICES, nodes_per_segment, theta)


@dataclass(frozen=True)
class ResidueMatrix:
    """Residue matrix of S at one simple pole."""

    pole: complex
    res: np.ndarray
    sheet: tuple[int, ...]


@dataclass(frozen=True)
class BackgroundCache:
    """Quadrature nodes zeta_k, complex weights w_k and cached S(zeta_k)."""

    nodes: np.ndarray
    weights: np.ndarray
    s_values: np.ndarray


@dataclass(frozen=True)
class MLExpansion:
    """Pole terms plus contour background; reconstructs S inside the contour."""

    poles: tuple[ResidueMatrix, ...]
    contour: Contour
    included: tuple[bool, ...]
    cache: BackgroundCache

    def __post_init__(self):
        if len(self.included) != len(self.poles):
            raise ValidationError("included mask length must match the pole list")

    def with_included(self, mask) -> "MLExpansion":
        return replace(self, included=tuple(bool(m) for m in mask))

    def excluding(self, *pole_numbers: int) -> "MLExpansion":
        """Copy with the given poles (1-based, ordered as stored) switched off."""
        mask = list(self.included)
        for p in pole_numbers:
            if not 1 <= p <= len(mask):
                raise ValidationError(f"pole number {p} out of range 1..{len(mask)}")
            mask[p - 1] = False
        return self.with_included(mask)

    def excluding_all(self) -> "MLExpansion":
        return self.with_included([False] * len(self.poles))


def residue(
    model: ChannelModel,
    pole_energy: complex,
    sheet,
    theta: float | None = None,
    eps: float = 1e-6,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> ResidueMatrix:
    """Residue of S at a converged simple pole.

    Res S(E_j) = f_out(E_j) adj(f_in(E_j)) / (d/dE det f_in)(E_j), the
    derivative by central difference with the given eps.
    """
    pole_energy = complex(pole_energy)
    sheet = tuple(sheet)
    point = EnergyPoint(pole_energy, sheet)
    f_in, f_out = jost_pair(model, point, theta_in=theta,
                            r_min=r_min, b=b, R=R, config=config)

    th = theta_for_f_in(model, point) if theta is None else theta

    def central(step):
        fp, fm = f_in_difference_pair(model, pole_energy, step, sheet, th,
                                      r_min=r_min, b=b, R=R, config=config)
        return det_central_difference(fp, fm, step)

    # The difference of the two determinants carries a fixed absolute noise
    # floor (double-precision roundoff through large matrix entries), so the
    # derivative error behaves like trunc*eps**2 + noise/eps.  Evaluate on a
    # short ladder and keep the prescribed step only while it is
    # truncation-dominated; otherwise take the widest step, whose truncation
    # is still far below every stated tolerance.
    cd = [central(eps), central(8.0 * eps), central(64.0 * eps)]
    scale = max(abs(c) for c in cd)
    if scale > 0.0 and abs(cd[0] - cd[1]) <= abs(cd[1] - cd[2]):
        dprime = cd[0]
    else:
        dprime = cd[2]
    if abs(dprime) < 1e-10:
        raise ScatteringError(
            f"|d det/dE| = {abs(dprime):.2e} < 1e-10 at E = {pole_energy}: "
            "zero is not simple"
        )
    return ResidueMatrix(pole=pole_energy, res=f_out @ adjugate(f_in) / dprime,
                         sheet=sheet)


def gauss_legendre_nodes(contour: Contour):
    """Quadrature nodes and complex weights (including dz) along the polygon."""
    x, w = np.polynomial.legendre.leggauss(contour.nodes_per_segment)
    nodes = []
    weights = []
    for a, b in contour.edges:
        nodes.append(a + (x + 1.0) * 0.5 * (b - a))
        weights.append(w * 0.5 * (b - a))
    return np.concatenate(nodes), np.concatenate(weights)


def background_cache(
    model: ChannelModel,
    contour: Contour,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> BackgroundCache:
    """Evaluate S at every contour node.

    Nodes below the real axis are taken on the all-unphysical sheet (the
    continuation of the physical S through the cut), nodes above on the
    all-physical sheet.  f_in uses the contour's rotation angle; f_out is
    re-run with an angle placing the node below the cut.
    """
    contour.validate_for_model(model)
    nodes, weights = gauss_legendre_nodes(contour)
    nch = model.n_channels
    s_values = np.empty((nodes.size, nch, nch), dtype=complex)
    for i, zeta in enumerate(nodes):
        sheet = unphysical_sheet(nch) if zeta.imag < 0 else physical_sheet(nch)
        point = EnergyPoint(complex(zeta), sheet)
        try:
            s_values[i] = s_matrix_at(model, point, theta_in=contour.theta,
                                      r_min=r_min, b=b, R=R, config=config).s
        except ScatteringError as exc:
            raise ScatteringError(f"background node {zeta}: {exc}") from exc
    return BackgroundCache(nodes=nodes, weights=weights, s_values=s_values)


def build_expansion(
    model: ChannelModel,
    poles,
    contour: Contour | None = None,
    eps: float = 1e-6,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> MLExpansion:
    """Residues plus background for the poles strictly inside the contour.

    ``poles`` may hold :class:`ResonancePole` objects (whose position
    E_r - i*Gamma/2 is consistent with the width by construction) or bare
    complex energies, then taken on the all-unphysical sheet.  Poles are
    stored sorted by increasing width, so pole number K counts along the
    resonance string starting from the narrowest member.
    """
    contour = contour if contour is not None else default_contour()
    entries = []
    for p in poles:
        if isinstance(p, ResonancePole):
            entries.append((p.energy, p.sheet))
        else:
            entries.append((complex(p), unphysical_sheet(model.n_channels)))
    entries.sort(key=lambda item: -item[0].imag)
    res_list = []
    for energy, sheet in entries:
        if not contour.contains(energy, margin=1e-9):
            raise ValidationError(f"pole {energy} is not strictly inside the contour")
        res_list.append(residue(model, energy, sheet, eps=eps,
                                r_min=r_min, b=b, R=R, config=config))
    cache = background_cache(model, contour, r_min=r_min, b=b, R=R, config=config)
    return MLExpansion(
        poles=tuple(res_list),
        contour=contour,
        included=(True,) * len(res_list),
        cache=cache,
    )


def ml_s_matrix(expansion: MLExpansion, e_real: float) -> np.ndarray:
    """Reconstruct S(E) from the included pole terms plus the background."""
    e = float(e_real)
    if not expansion.contour.contains(complex(e), margin=1e-9):
        raise ValidationError(f"E = {e} is not strictly inside the contour")
    nch = expansion.cache.s_values.shape[1]
    s = np.zeros((nch, nch), dtype=complex)
    for keep, rm in zip(expansion.included, expansion.poles):
        if keep:
            s += rm.res / (e - rm.pole)
    w = expansion.cache.weights / (expansion.cache.nodes - e)
    s += np.tensordot(w, expansion.cache.s_values, axes=(0, 0)) / (2j * math.pi)
    return s


def argand_trajectory(
    source,
    element: tuple[int, int],
    e_grid,
    r_min: float = R_MIN_DEFAULT,
    b: float = B_DEFAULT,
    R: float = R_DEFAULT,
    config: IntegratorConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """S_element(E) sampled along an ascending real-energy grid.

    ``source`` is a :class:`ChannelModel` (direct solves) or an
    :class:`MLExpansion` (reconstruction honouring its included mask).
    ``element`` is the 1-based (to_channel, from_channel) pair.
    """
    grid = np.asarray([float(e) for e in e_grid])
    if grid.size < 1 or np.any(np.diff(grid) <= 0):
        raise ValidationError("energy grid must be strictly ascending")
    to_ch, from_ch = (int(x) for x in element)
    if isinstance(source, MLExpansion):
        nch = source.cache.s_values.shape[1]
    elif isinstance(source, ChannelModel):
        nch = source.n_channels
    else:
        raise ValidationError("source must be a ChannelModel or an MLExpansion")
    if not (1 <= to_ch <= nch and 1 <= from_ch <= nch):
        raise ValidationError(f"element labels must be in 1..{nch}")

    out = np.empty(grid.size, dtype=complex)
    for i, e in enumerate(grid):
        if isinstance(source, MLExpansion):
            out[i] = ml_s_matrix(source, e)[to_ch - 1, from_ch - 1]
        else:
            out[i] = s_matrix(source, e, r_min=r_min, b=b, R=R,
                              config=config).s[to_ch - 1, from_ch - 1]
    return out


def winding_angle(trajectory, e_grid, e_min: float, e_max: float,
                  min_step: float = 0.0) -> float:
    """Total signed turning angle (radians, ccw positive) over an energy window.

    A resonance loop contributes a full +2*pi; smooth background bending
    stays well below that.  With ``min_step`` > 0 the trajectory is first
    coarsened to points at least that far apart in the S-plane, which makes
    the measure blind to knots smaller than the given scale.
    """
    traj = np.asarray(trajectory, dtype=complex)
    grid = np.asarray([float(e) for e in e_grid])
    sel = (grid >= e_min) & (grid <= e_max)
    pts = traj[sel]
    if min_step > 0.0 and pts.size:
        kept = [pts[0]]
        for q in pts[1:]:
            if abs(q - kept[-1]) >= min_step:
                kept.append(q)
        pts = np.asarray(kept)
    if pts.size < 3:
        return 0.0
    v = np.diff(pts)
    v = v[np.abs(v) > 0]
    if v.size < 2:
        return 0.0
    return float(np.sum(np.angle(v[1:] / v[:-1])))


@dataclass(frozen=True)
class Arc:
    """A maximal run of same-sense turning along an Argand trajectory."""

    e_start: float
    e_end: float
    orientation: str  # "ccw" | "cw"


def detect_arcs(trajectory, e_grid, min_run: int = 3) -> tuple[Arc, ...]:
    """Arcs of persistent turning sense along a sampled trajectory.

    The turning sense at an interior point is the sign of the cross product
    of the incoming and outgoing steps (positive = counter-clockwise).
    Single-point sign flips are merged into the surrounding run; runs
    shorter than ``min_run`` are dropped.  Repeated points give no turning
    information and are skipped with a warning.
    """
    traj = np.asarray(trajectory, dtype=complex)
    grid = np.asarray([float(e) for e in e_grid])
    if traj.shape != grid.shape:
        raise ValidationError("trajectory and energy grid must have equal length")
    m = traj.size
    if m < 3:
        raise ValidationError("need at least three trajectory points")

    signs = np.zeros(m, dtype=int)
    warned = False
    for i in range(1, m - 1):
        v1 = traj[i] - traj[i - 1]
        v2 = traj[i + 1] - traj[i]
        if v1 == 0 or v2 == 0:
            if not warned:
                warnings.warn("degenerate (repeated) trajectory points skipped")
                warned = True
            continue
        cross = v1.real * v2.imag - v1.imag * v2.real
        signs[i] = 0 if cross == 0 else (1 if cross > 0 else -1)

    for i in range(1, m - 1):
        if signs[i - 1] != 0 and signs[i] != signs[i - 1] and signs[i + 1] == signs[i - 1]:
            signs[i] = signs[i - 1]

    arcs = []
    i = 1
    while i < m - 1:
        s = signs[i]
        if s == 0:
            i += 1
            continue
        j = i
        while j + 1 < m - 1 and signs[j + 1] == s:
            j += 1
        if j - i + 1 >= min_run:
            arcs.append(Arc(
                e_start=float(grid[i - 1]),
                e_end=float(grid[j + 1]),
                orientation="ccw" if s > 0 else "cw",
            ))
        i = j + 1
    return tuple(arcs)


def _c2l(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _l2c(v) -> complex:
    return complex(float(v[0]), float(v[1]))


def expansion_to_dict(expansion: MLExpansion) -> dict:
    return {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "contour": {
            "vertices": [_c2l(v) for v in expansion.contour.vertices],
            "nodes_per_segment": expansion.contour.nodes_per_segment,
            "theta": expansion.contour.theta,
        },
        "poles": [
            {
                "energy": _c2l(rm.pole),
                "sheet": list(rm.sheet),
                "residues": [[_c2l(x) for x in row] for row in rm.res],
                "included": bool(keep),
            }
            for rm, keep in zip(expansion.poles, expansion.included)
        ],
        "background": [
            {
                "node": _c2l(z),
                "weight": _c2l(w),
                "s": [[_c2l(x) for x in row] for row in sv],
            }
            for z, w, sv in zip(expansion.cache.nodes, expansion.cache.weights,
                                expansion.cache.s_values)
        ],
    }


def expansion_from_dict(data: dict) -> MLExpansion:
    if data.get("format") != CACHE_FORMAT:
        raise ValidationError("not an expansion cache file")
    if data.get("version") != CACHE_VERSION:
        raise ValidationError(
            f"cache version {data.get('version')!r} not supported "
            f"(expected {CACHE_VERSION})"
        )
    contour = Contour(
        vertices=tuple(_l2c(v) for v in data["contour"]["vertices"]),
        nodes_per_segment=int(data["contour"]["nodes_per_segment"]),
        theta=float(data["contour"]["theta"]),
    )
    poles = []
    included = []
    for p in data["poles"]:
        poles.append(ResidueMatrix(
            pole=_l2c(p["energy"]),
            res=np.array([[_l2c(x) for x in row] for row in p["residues"]]),
            sheet=tuple(int(s) for s in p["sheet"]),
        ))
        included.append(bool(p["included"]))
    bg = data["background"]
    nodes = np.array([_l2c(e["node"]) for e in bg])
    weights = np.array([_l2c(e["weight"]) for e in bg])
    s_values = np.array([[[_l2c(x) for x in row] for row in e["s"]] for e in bg])
    return MLExpansion(
        poles=tuple(poles),
        contour=contour,
        included=tuple(included),
        cache=BackgroundCache(nodes=nodes, weights=weights, s_values=s_values),
    )


def save_expansion(expansion: MLExpansion, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(expansion_to_dict(expansion), fh)
        fh.write("\n")


def load_expansion(path) -> MLExpansion:
    with open(Path(path), "r", encoding="utf-8") as fh:
        return expansion_from_dict(json.load(fh))
