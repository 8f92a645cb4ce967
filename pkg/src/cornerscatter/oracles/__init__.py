"""Closed-form and exact-arithmetic ground truth."""

from .ck import (
    CauchyKowalevskiError,
    CKChecks,
    cauchy_kowalevski_halfspace,
    random_homogeneous,
    tangential_laplacian,
    verify_cauchy_kowalevski,
)
from .halfspace import (
    Bump,
    ClosedFormField,
    ResidualReport,
    default_test_family,
    distributional_residual,
    distributional_residual_report,
    fullplane_blowup_solution,
    halfspace_blowup_solution,
    halfspace_constant,
)
from .mie import InteriorResonance, mie_disk_farfield, mie_scattered_coefficients
from .moments import circle_moment, disk_moment, weiss_energy_exact
from .sector import (
    sector_neumann_kernel_dim,
    sector_neumann_matrix,
    sector_neumann_witness,
    sector_system_determinant,
    sector_system_matrix,
)
from ..polynomials import GaussianRational, MultiPoly, complex_power, radius_squared, xvars

__all__ = [
    "Bump", "CKChecks", "CauchyKowalevskiError", "ClosedFormField", "GaussianRational", "InteriorResonance",
    "MultiPoly", "ResidualReport", "cauchy_kowalevski_halfspace", "circle_moment", "complex_power",
    "default_test_family", "disk_moment", "distributional_residual", "distributional_residual_report",
    "fullplane_blowup_solution", "halfspace_blowup_solution", "halfspace_constant", "mie_disk_farfield",
    "mie_scattered_coefficients", "radius_squared", "random_homogeneous", "sector_neumann_kernel_dim", "sector_neumann_matrix",
    "sector_neumann_witness", "sector_system_determinant", "sector_system_matrix", "tangential_laplacian",
    "verify_cauchy_kowalevski", "weiss_energy_exact", "xvars",
]
