"""
Classical load-flow baselines
"""

from ..manifold import lindistflow_solve
from .angles import recover_angles
from .compare import ComparisonMetrics, solution_compare
from .newton_raphson import PolarSolution, branch_quantities, newton_raphson, ybus_build
from .sweep import backward_sweep, bfs_solve

__all__ = [
    "ComparisonMetrics",
    "PolarSolution",
    "backward_sweep",
    "bfs_solve",
    "branch_quantities",
    "lindistflow_solve",
    "newton_raphson",
    "recover_angles",
    "solution_compare",
    "ybus_build",
]
