"""Dual mixed hybrid RT0 finite elements for advection-diffusion-reaction
problems with a selective interface on the unit cube."""

from .analytic import AnalyticSolution, active_solution, nonactive_solution, residual_check
from .assembly import FaceSolution, ReducedSystem, assemble_reduced, number_unknowns, solve
from .condensation import element_system
from .mesh import Mesh, build_cube_mesh
from .postprocess import SolutionFields, compute_errors, line_profile, recover_fields
from .problem import (
    Coefficients,
    Dirichlet,
    Neumann,
    PecletMode,
    ProblemSpec,
    Robin,
    Stabilization,
)
from .wellposedness import WellposednessReport, smallness

__version__ = "0.1.0"

__all__ = [
    "AnalyticSolution",
    "Coefficients",
    "Dirichlet",
    "FaceSolution",
    "Mesh",
    "Neumann",
    "PecletMode",
    "ProblemSpec",
    "ReducedSystem",
    "Robin",
    "SolutionFields",
    "Stabilization",
    "WellposednessReport",
    "active_solution",
    "assemble_reduced",
    "build_cube_mesh",
    "compute_errors",
    "element_system",
    "line_profile",
    "nonactive_solution",
    "number_unknowns",
    "recover_fields",
    "residual_check",
    "smallness",
    "solve",
]
