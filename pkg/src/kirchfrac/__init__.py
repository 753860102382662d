"""Linearized fractional Crank-Nicolson Galerkin solver for a Kirchhoff-type
time-fractional integro-differential equation on graded time meshes."""

from .benchmark import ManufacturedProblem, rate, source_eval, verify_manufactured
from .caputo import CaputoRow, apply_discrete_caputo, caputo_row, gamma, kernel_moments
from .exceptions import (
    BreakdownError,
    IndefiniteSystemError,
    NonConvergenceError,
    NumericalError,
    ParameterDomainError,
    SingularUpdateError,
)
from .fem import Triangulation, assemble_mass, assemble_stiffness, build_square_mesh
from .linalg import SpdSolver, solve_rank_one, solve_spd
from .memory import MemoryWeights, memory_weights, quadrature_error_probe
from .stepper import NewtonReport, ProblemSpec, RunReport, StateHistory, Stepper, run
from .time_mesh import (
    TimeMesh,
    build_graded,
    build_mesh,
    build_two_part,
    build_uniform,
    sigma_point,
)

__version__ = "0.1.0"
