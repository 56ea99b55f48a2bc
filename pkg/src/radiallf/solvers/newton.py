"""
Riemannian Newton method on the QE manifold
"""

import logging
from typing import Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from ..errors import SingularHessian
from ..grid import RadialNetwork
from ..manifold import FlowLinearSystem, Manifold, ProjectionContext, TangentVector, as_vector, linear_part, qe_hessian
from .config import SolverConfig
from .riemannian import Objective, RiemannianSolver, SolveReport

logger = logging.getLogger("radiallf.solvers.newton")

DENSE_LIMIT = 200


def newton_direction_qe(
    net: RadialNetwork,
    u,
    sys: Optional[FlowLinearSystem] = None,
    ctx: Optional[ProjectionContext] = None,
    gmres_rtol: float = 1e-12,
) -> TangentVector:
    """Solve hess f(u)[zeta] = -grad f(u) with zeta tangent at u.

    Uses the saddle-point system [H, Dh^T; Dh, 0] [zeta; mu] = [-grad; 0],
    assembled densely for J <= DENSE_LIMIT and solved with GMRES above.
    """
    sys = sys or linear_part(net)
    hessian = qe_hessian(sys, net, u, ctx)
    jac = hessian.ctx.jacobian
    grad = hessian.grad
    m, n = jac.shape
    rhs = np.concatenate([-grad, np.zeros(m)])

    if m <= DENSE_LIMIT:
        H = hessian.apply(np.eye(n))
        dense_jac = jac.toarray()
        kkt = np.block([[H, dense_jac.T], [dense_jac, np.zeros((m, m))]])
        try:
            solution = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError as e:
            raise SingularHessian(f"Newton system is singular ({e})")
    else:
        def matvec(y):
            zeta, mu = y[:n], y[n:]
            return np.concatenate([hessian.apply(zeta) + jac.T @ mu, jac @ zeta])

        operator = LinearOperator((n + m, n + m), matvec=matvec, dtype=float)
        solution, info = gmres(operator, rhs, rtol=gmres_rtol, restart=min(n + m, 200), maxiter=50)
        if info != 0:
            raise SingularHessian(f"GMRES did not solve the Newton system (info {info})")
    if not np.all(np.isfinite(solution)):
        raise SingularHessian("Newton system produced non-finite values")

    zeta = solution[:n]
    slope = float(grad @ zeta)
    if slope >= 0:
        logger.warning(f"{net.name}: Newton direction is not a descent direction (<grad, zeta> = {slope:.3e})")
    return TangentVector(Manifold.QE, zeta, u)


def _newton_step(objective: Objective, point, grad: TangentVector, ctx: ProjectionContext) -> TangentVector:
    return newton_direction_qe(objective.net, as_vector(point), objective.sys, ctx)


def solve_newton_qe(net: RadialNetwork, cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Unit-step Riemannian Newton iteration on the QE manifold"""
    cfg = cfg or SolverConfig.for_method("newton-qe")
    solver = RiemannianSolver("newton-qe", Manifold.QE, _newton_step, line_search=False, divergence_window=10)
    return solver.solve(net, cfg)
