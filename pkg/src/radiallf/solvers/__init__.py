"""
Riemannian load-flow solvers
"""

from .config import ArmijoConfig, InitKind, SolverConfig, METHODS, manifold_of_method
from .initialization import init_flat, init_warm, initial_point
from .linesearch import ArmijoStep, armijo
from .riemannian import (
    IterationRecord,
    Objective,
    RiemannianSolver,
    SolveReport,
    max_voltage_change,
    pan_direction_bfm,
    pan_direction_qe,
    pan_first_iteration,
    solve_gd,
    solve_pan,
    stop_check,
)
from .newton import newton_direction_qe, solve_newton_qe

__all__ = [
    "ArmijoConfig",
    "ArmijoStep",
    "InitKind",
    "IterationRecord",
    "METHODS",
    "Objective",
    "RiemannianSolver",
    "SolveReport",
    "SolverConfig",
    "armijo",
    "init_flat",
    "init_warm",
    "initial_point",
    "manifold_of_method",
    "max_voltage_change",
    "newton_direction_qe",
    "pan_direction_bfm",
    "pan_direction_qe",
    "pan_first_iteration",
    "solve_gd",
    "solve_newton_qe",
    "solve_pan",
    "stop_check",
]
