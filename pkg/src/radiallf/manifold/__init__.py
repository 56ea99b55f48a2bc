"""
Manifold geometry for radiallf
"""

from .points import BfmPoint, Manifold, QePoint, TangentVector, as_vector
from .geometry import (
    ConeCurvature,
    FlowLinearSystem,
    ProjectionContext,
    RiemannianHessian,
    bfm_differential,
    bfm_hessian,
    bfm_projection,
    bfm_residual,
    grad_bfm,
    grad_qe,
    hess_bfm_apply,
    hess_qe_apply,
    linear_part,
    objective_bfm,
    objective_qe,
    project_tangent,
    projector_derivative,
    qe_differential,
    qe_hessian,
    qe_projection,
    qe_residual,
)
from .retraction import (
    RetractionCheck,
    RetractionKind,
    check_retraction,
    retract,
    retract_bfm,
    retract_qe_current,
    retract_qe_sphere,
    retraction_for,
    solved_injections,
)
from .lindistflow import lindistflow_solve

__all__ = [
    "BfmPoint",
    "ConeCurvature",
    "FlowLinearSystem",
    "Manifold",
    "ProjectionContext",
    "QePoint",
    "RetractionCheck",
    "RetractionKind",
    "RiemannianHessian",
    "TangentVector",
    "as_vector",
    "bfm_differential",
    "bfm_hessian",
    "bfm_projection",
    "bfm_residual",
    "check_retraction",
    "grad_bfm",
    "grad_qe",
    "hess_bfm_apply",
    "hess_qe_apply",
    "lindistflow_solve",
    "linear_part",
    "objective_bfm",
    "objective_qe",
    "project_tangent",
    "projector_derivative",
    "qe_differential",
    "qe_hessian",
    "qe_projection",
    "qe_residual",
    "retract",
    "retract_bfm",
    "retract_qe_current",
    "retract_qe_sphere",
    "retraction_for",
    "solved_injections",
]
