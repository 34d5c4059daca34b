"""Lax-Friedrichs and Leap-Frog solvers for hyperbolic PDEs with a point-wise
spatial delay, ``u_t + a u_x = b u(x - alpha, t)``, in one and two dimensions."""

__version__ = "0.1.0"

from .errors import (BlowUp, ConfigError, DelayPdeError, EvalDomainError, IllPosedProblem,
                     IncommensurateDelay, IndexOutOfRange, InvalidArgument, MeshMismatch,
                     ParseError, StrictCflViolation, UnknownVariable, Unstable)
from .expr import CoefficientExpr, eval_expr, parse_expr, sup_abs_sampled
from .mesh import Grid1D, Grid2D, build_grid_1d, build_grid_2d, node_position
from .problem import (DelayProblem1D, DelayProblem2D, OutflowPolicy, ValidationReport,
                      boundary_inflow_value, validate)
from .solver import (LAX_FRIEDRICHS, LEAP_FROG, CflReport, Field1D, SolutionHistory,
                     bootstrap_leap_frog, cfl_max_dt_1d, delayed_value_1d,
                     lax_friedrichs_step_1d, leap_frog_step_1d, solve_1d)
from .solver2d import (Field2D, bootstrap_leap_frog_2d, cfl_max_dt_2d, lax_friedrichs_step_2d,
                       leap_frog_step_2d, solve_2d)
from .analysis import (ErrorTable, convergence_table, double_mesh_l2_error,
                       double_mesh_max_error, observed_order)

__all__ = [
    "BlowUp", "ConfigError", "DelayPdeError", "EvalDomainError", "IllPosedProblem",
    "IncommensurateDelay", "IndexOutOfRange", "InvalidArgument", "MeshMismatch", "ParseError",
    "StrictCflViolation", "UnknownVariable", "Unstable",
    "CoefficientExpr", "eval_expr", "parse_expr", "sup_abs_sampled",
    "Grid1D", "Grid2D", "build_grid_1d", "build_grid_2d", "node_position",
    "DelayProblem1D", "DelayProblem2D", "OutflowPolicy", "ValidationReport",
    "boundary_inflow_value", "validate",
    "LAX_FRIEDRICHS", "LEAP_FROG", "CflReport", "Field1D", "SolutionHistory",
    "bootstrap_leap_frog", "cfl_max_dt_1d", "delayed_value_1d", "lax_friedrichs_step_1d",
    "leap_frog_step_1d", "solve_1d",
    "Field2D", "bootstrap_leap_frog_2d", "cfl_max_dt_2d", "lax_friedrichs_step_2d",
    "leap_frog_step_2d", "solve_2d",
    "ErrorTable", "convergence_table", "double_mesh_l2_error", "double_mesh_max_error",
    "observed_order",
]
