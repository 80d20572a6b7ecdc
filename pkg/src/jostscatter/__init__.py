"""Coupled-channel scattering via Jost matrices on complex-rotated paths.

Locates bound states and resonances as zeros of det f_in, splits resonance
widths into channels, and decomposes the S-matrix into resonance-pole terms
plus a contour-integral background for per-pole analysis of cross sections
and Argand trajectories.
"""

from .errors import (
    BranchPointError,
    ConvergenceError,
    IntegrationError,
    ScatteringError,
    UnreachableError,
    ValidationError,
)
from .jost import (
    JostMatrices,
    SMatrix,
    cross_section,
    flux_weighted,
    jost_matrices,
    jost_pair,
    s_matrix,
    s_matrix_at,
    wavefunction,
)
from .mittag import (
    Arc,
    Contour,
    MLExpansion,
    ResidueMatrix,
    argand_trajectory,
    background_cache,
    build_expansion,
    default_contour,
    detect_arcs,
    load_expansion,
    ml_s_matrix,
    residue,
    save_expansion,
)
from .model import (
    ChannelModel,
    EnergyPoint,
    PotentialTerm,
    channel_momenta,
    free_model,
    load_model,
    model_from_dict,
    model_to_dict,
    noro_taylor,
    physical_sheet,
    potential_matrix,
    save_model,
    unphysical_sheet,
)
from .odeint import ComplexPath, IntegratorConfig, integrate, two_segment_path
from .spectral import (
    ResonancePole,
    SpectralPoint,
    Spectrum,
    det_jost,
    find_spectrum,
    partial_widths,
    refine_zero,
    scan_minima,
)

__version__ = "0.1.0"
