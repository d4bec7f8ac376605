"""Primal-dual weak Galerkin (PD-WG) solver for the elliptic Cauchy problem.

Solves Delta u = f on the unit square with Dirichlet data g1 on Gamma_d and
Neumann data g2 on Gamma_n, where the two boundary segments may overlap
(Cauchy data) and leave the rest of the boundary data-free.  The discrete
scheme minimizes a weak-continuity stabilizer subject to an elementwise
weak-Laplacian constraint, yielding a sparse symmetric indefinite
saddle-point system for the primal field and a per-element multiplier.
"""

from pdwg.mesh import BoundarySegmentSpec, Mesh, build_uniform_unit_square, classify_boundary
from pdwg.problems import NoiseSpec, catalog, case_configs
from pdwg.assembly import build_saddle_system
from pdwg.linsolve import SingularSystem, factor_and_solve
from pdwg.norms import error_norms, project_exact

__all__ = [
    "BoundarySegmentSpec",
    "Mesh",
    "NoiseSpec",
    "SingularSystem",
    "build_saddle_system",
    "build_uniform_unit_square",
    "case_configs",
    "catalog",
    "classify_boundary",
    "error_norms",
    "factor_and_solve",
    "project_exact",
]

__version__ = "0.1.0"
