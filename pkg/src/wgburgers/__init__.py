"""Weak Galerkin finite element solver for the 1D viscous Burgers equation.

The discrete unknown pairs an interior polynomial of degree k per element with
single-valued node values; derivatives are taken in the discrete weak sense
(element-wise degree k + 1), the convection term uses the energy-stable
one-third split, and time stepping is backward differencing with a fixed-point
resolution of the nonlinearity.
"""

from .assembly import (
    AssembledSystem,
    BandedMatrix,
    DofMap,
    FormAssembler,
    SingularSystemError,
    assemble_convection,
    assemble_diffusion,
    assemble_mass,
    assemble_step_system,
    solve_banded,
)
from .errors import (
    ConvergenceTable,
    ErrorReport,
    convergence_study,
    discrete_h1_error,
    discrete_l2_error,
    error_report,
    rate_study_tau,
)
from .exact import (
    FourierSolution,
    UnsupportedViscosityError,
    WoodSolution,
    fourier_coefficients,
    fourier_eval,
    fourier_solution_for,
    pde_residual,
    wood_eval,
)
from .mesh import Mesh, build_uniform_mesh, map_to_element
from .quadrature import QuadratureRule, RefPoly, gauss_rule, legendre_deriv, legendre_eval
from .solver import (
    PicardNonconvergenceError,
    SolverConfig,
    TimeStepper,
    Trajectory,
    initial_state,
    solve_trajectory,
    step,
)
from .weakspace import (
    WeakDerivative,
    WeakFunction,
    interior_inner,
    interior_norm,
    l2_project,
    qh_project,
    weak_derivative,
)

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem",
    "BandedMatrix",
    "ConvergenceTable",
    "DofMap",
    "ErrorReport",
    "FormAssembler",
    "FourierSolution",
    "Mesh",
    "PicardNonconvergenceError",
    "QuadratureRule",
    "RefPoly",
    "SingularSystemError",
    "SolverConfig",
    "TimeStepper",
    "Trajectory",
    "UnsupportedViscosityError",
    "WeakDerivative",
    "WeakFunction",
    "WoodSolution",
    "assemble_convection",
    "assemble_diffusion",
    "assemble_mass",
    "assemble_step_system",
    "build_uniform_mesh",
    "convergence_study",
    "discrete_h1_error",
    "discrete_l2_error",
    "error_report",
    "fourier_coefficients",
    "fourier_eval",
    "fourier_solution_for",
    "gauss_rule",
    "initial_state",
    "interior_inner",
    "interior_norm",
    "l2_project",
    "legendre_deriv",
    "legendre_eval",
    "map_to_element",
    "pde_residual",
    "qh_project",
    "rate_study_tau",
    "solve_banded",
    "solve_trajectory",
    "step",
    "weak_derivative",
    "wood_eval",
]
