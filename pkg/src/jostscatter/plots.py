"""Figure rendering for the command-line reports.

Every CLI report that writes a data file also renders a matplotlib figure
next to it (same stem, .png) unless asked not to.  Rendering is headless.
"""

from __future__ import annotations

import cmath
import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_DPI = 150


def save_spectrum_figure(bound_energies, pole_energies, path) -> None:
    """Spectral points in the complex energy plane."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if bound_energies:
        ax.plot([e.real for e in bound_energies], [e.imag for e in bound_energies],
                "s", mfc="none", color="tab:blue", label="bound")
    if pole_energies:
        ax.plot([e.real for e in pole_energies], [e.imag for e in pole_energies],
                "o", mfc="none", color="tab:red", label="resonance")
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("Re E")
    ax.set_ylabel("Im E")
    ax.legend(loc="best", frameon=False)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def save_xsec_figure(energies, curves: dict, path) -> None:
    """Cross-section curves sigma(E) per transition."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, values in curves.items():
        ax.plot(energies, values, lw=1.0, label=label)
    ax.set_xlabel("E")
    ax.set_ylabel("cross section")
    ax.set_yscale("log")
    ax.legend(loc="best", frameon=False)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def save_residues_figure(poles, path) -> None:
    """Residue spirals (one panel per matrix element) plus their phases."""
    n = poles[0].res.shape[0] if poles else 2
    labels = [(i, j) for i in range(n) for j in range(i, n)]
    fig, axes = plt.subplots(1, len(labels) + 1,
                             figsize=(3.2 * (len(labels) + 1), 3.2))
    for ax, (i, j) in zip(axes, labels):
        vals = [rm.res[i, j] for rm in poles]
        ax.plot([v.real for v in vals], [v.imag for v in vals], "o-", ms=4, lw=0.8)
        ax.axhline(0, color="0.8", lw=0.6)
        ax.axvline(0, color="0.8", lw=0.6)
        ax.set_title(f"Res S{i + 1}{j + 1}")
        ax.set_xlabel("Re")
        ax.set_ylabel("Im")
    ax = axes[-1]
    for i, j in labels:
        ax.plot(range(1, len(poles) + 1),
                [cmath.phase(rm.res[i, j]) for rm in poles],
                "o-", ms=4, lw=0.8, label=f"S{i + 1}{j + 1}")
    ax.set_xlabel("pole number")
    ax.set_ylabel("phase (rad)")
    ax.set_title("residue phases")
    ax.legend(loc="best", frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def save_argand_figure(energies, trajectory, element, path, unit_circle=True) -> None:
    """Argand trajectory with integer-energy markers."""
    energies = np.asarray(energies, dtype=float)
    traj = np.asarray(trajectory, dtype=complex)
    fig, ax = plt.subplots(figsize=(4.6, 4.6))
    ax.plot(traj.real, traj.imag, lw=0.9, color="tab:blue")
    marker = np.isclose(energies, np.round(energies), atol=1e-9)
    ax.plot(traj[marker].real, traj[marker].imag, ".", ms=5, color="tab:red")
    if unit_circle:
        ph = np.linspace(0.0, 2.0 * math.pi, 256)
        ax.plot(np.cos(ph), np.sin(ph), color="0.75", lw=0.7)
    ax.set_aspect("equal")
    ax.set_xlabel(f"Re S{element[0]}{element[1]}")
    ax.set_ylabel(f"Im S{element[0]}{element[1]}")
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
