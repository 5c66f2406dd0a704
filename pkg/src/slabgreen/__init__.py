"""Spectrum-based Green's function and radiation diagnostics for open slab waveguides."""

from .field import (
    FieldEvaluator,
    FieldGrid,
    SourceSpec,
    guided_component,
    modal_projection,
    pde_residual,
    remainder_component,
    synthesize_field,
)
from .green import GreenParts, green, green_guided, green_rad_contour, green_rad_real
from .modes import ModeTable, dispersion_value, find_guided_modes, mode_shape
from .ode import PhiSolution, solve_phi, solve_phi_volterra
from .profile import WaveguideProfile, build_profile, potential_at
from .radiation import (
    BoundarySample,
    boundary_sample,
    decay_slope,
    flux_balance,
    orthogonality_defect,
    radiation_residual,
    rellich_reduction_check,
)
from .special import hankel_h0, hankel_h1
from .spectral import (
    big_phi,
    bracket_maps,
    build_contour,
    g_kernel,
    phi_asymptotic,
    sigma_weight,
    v_continuum,
)

__version__ = "0.1.0"

__all__ = [
    "BoundarySample",
    "FieldEvaluator",
    "FieldGrid",
    "GreenParts",
    "ModeTable",
    "PhiSolution",
    "SourceSpec",
    "WaveguideProfile",
    "big_phi",
    "boundary_sample",
    "bracket_maps",
    "build_contour",
    "build_profile",
    "decay_slope",
    "dispersion_value",
    "find_guided_modes",
    "flux_balance",
    "g_kernel",
    "green",
    "green_guided",
    "green_rad_contour",
    "green_rad_real",
    "guided_component",
    "hankel_h0",
    "hankel_h1",
    "modal_projection",
    "mode_shape",
    "orthogonality_defect",
    "pde_residual",
    "phi_asymptotic",
    "potential_at",
    "radiation_residual",
    "rellich_reduction_check",
    "remainder_component",
    "sigma_weight",
    "solve_phi",
    "solve_phi_volterra",
    "synthesize_field",
    "v_continuum",
]
