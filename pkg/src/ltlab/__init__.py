"""Numerical laboratory for strong-coupling Lieb-Thirring inequalities.

Spectral fractional kinetic energies, variational Gagliardo-Nirenberg and
Hardy constants, a stopping-time cube covering, explicit local exclusion
bounds and a certification pipeline for few-body energy quotients.
"""

from ltlab.grid_core import (
    BoxSpec,
    DomainMask,
    GridFunction,
    SeminormSpec,
    frac_laplacian_apply,
    hardy_energy,
    ims_defect,
    seminorm_domain,
    seminorm_global,
)
from ltlab.analytic_constants import (
    gn_reference_1d,
    hardy_constant,
    semiclassical_constant,
)

__all__ = [
    "BoxSpec",
    "DomainMask",
    "GridFunction",
    "SeminormSpec",
    "frac_laplacian_apply",
    "gn_reference_1d",
    "hardy_constant",
    "hardy_energy",
    "ims_defect",
    "semiclassical_constant",
    "seminorm_domain",
    "seminorm_global",
]

__version__ = "0.1.0"
