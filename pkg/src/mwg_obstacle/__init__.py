"""Adaptive modified weak Galerkin method for the elliptic obstacle problem."""
from .mesh import LShape, Rectangle, Square, TriMesh, bisect, build_initial_mesh, shape_regularity
from .dgspace import DgField, ElementConstants, conforming_part, lift_pi_inverse, project_pi0, weak_gradient
from .assembly import SparseSystem, assemble, energy_error, energy_norm
from .solver import SolverError, ViSolution, conforming_residual, multiplier_crosscheck, solve_vi
from .estimator import EstimatorBreakdown, estimate, oscillation
from .adapt import RunRecord, StopRule, dorfler_mark, run_adaptive
from .problems import ProblemSpec, example_1, example_2, example_3, get_problem

__version__ = "0.1.0"
