"""
Riemannian gradient descent and approximate Newton solvers
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..errors import (
    Diverged,
    MaxIterExceeded,
    RadialLFError,
    SingularDirectionSystem,
)
from ..grid import RadialNetwork
from ..manifold import (
    FlowLinearSystem,
    Manifold,
    ProjectionContext,
    TangentVector,
    as_vector,
    bfm_differential,
    bfm_projection,
    grad_bfm,
    grad_qe,
    linear_part,
    objective_bfm,
    qe_differential,
    qe_projection,
    retract,
    retraction_for,
)
from .config import SolverConfig
from .initialization import initial_point
from .linesearch import armijo


@dataclass
class IterationRecord:
    """One row of a solver trajectory"""
    iteration: int
    f: float
    grad_norm: float
    max_dv: float
    step: float
    time_ms: float


@dataclass
class SolveReport:
    """Outcome of one solver run"""
    method: str
    converged: bool = False
    iterations: int = 0
    trajectory: List[IterationRecord] = field(default_factory=list)
    point: object = None
    failure: Optional[RadialLFError] = None
    initial_f: float = float("nan")
    initial_grad_norm: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def f_values(self) -> np.ndarray:
        return np.array([record.f for record in self.trajectory])

    @property
    def v(self) -> np.ndarray:
        """Squared voltages of the final point"""
        if "v" in self.extra:
            return self.extra["v"]
        return np.asarray(self.point.v)

    @property
    def failure_reason(self) -> Optional[str]:
        if self.failure is None:
            return None
        return f"{type(self.failure).__name__}: {self.failure}"

    def record(self, record: IterationRecord):
        self.trajectory.append(record)
        self.iterations = len(self.trajectory)

    def raise_for_failure(self):
        """Raise the stored failure, if any"""
        if self.failure is not None:
            raise self.failure


def max_voltage_change(v_prev, v_next) -> float:
    """max |sqrt(v_next) - sqrt(v_prev)| over the nodes"""
    prev = np.sqrt(np.maximum(np.asarray(v_prev, dtype=float), 0.0))
    nxt = np.sqrt(np.maximum(np.asarray(v_next, dtype=float), 0.0))
    return float(np.max(np.abs(nxt - prev))) if prev.size else 0.0


def stop_check(point_prev, point_next, grad, cfg: SolverConfig) -> bool:
    """True when ||grad||_2 <= eps_grad and the voltage magnitudes moved by at most eps_volt"""
    grad_norm = float(np.linalg.norm(as_vector(grad)))
    return grad_norm <= cfg.eps_grad and max_voltage_change(point_prev.v, point_next.v) <= cfg.eps_volt


class Objective:
    """Mismatch objective and its Riemannian gradient on one manifold"""

    def __init__(self, net: RadialNetwork, manifold: Manifold, sys: Optional[FlowLinearSystem] = None):
        self.net = net
        self.manifold = manifold
        self.sys = sys or linear_part(net)
        self.w_bar = net.w_bar

    def value(self, point) -> float:
        if self.manifold is Manifold.BFM:
            return objective_bfm(point, self.w_bar)
        return self.sys.objective(point)

    def projection(self, point) -> ProjectionContext:
        if self.manifold is Manifold.BFM:
            return bfm_projection(self.net, point)
        return qe_projection(self.net, point)

    def gradient(self, point, ctx: Optional[ProjectionContext] = None) -> TangentVector:
        if self.manifold is Manifold.BFM:
            return grad_bfm(self.net, point, ctx)
        return grad_qe(self.sys, self.net, point, ctx)


# Direction finders get (objective, point, grad, ctx) and return the tangent step
DirectionFinder = Callable[[Objective, object, TangentVector, ProjectionContext], TangentVector]


class RiemannianSolver:
    """Iterate direction, step and retraction until the stopping rule holds"""

    def __init__(
        self,
        method: str,
        manifold: Manifold,
        direction: DirectionFinder,
        line_search: bool = True,
        divergence_window: Optional[int] = None,
    ):
        self.method = method
        self.manifold = manifold
        self.direction = direction
        self.line_search = line_search
        self.divergence_window = divergence_window
        self.logger = logging.getLogger(f"radiallf.solvers.{method}")

    def solve(self, net: RadialNetwork, cfg: SolverConfig) -> SolveReport:
        report = SolveReport(method=self.method)
        kind = retraction_for(self.manifold, cfg.retraction)
        try:
            objective = Objective(net, self.manifold)
            point = initial_point(net, self.manifold, cfg.init)
            ctx = objective.projection(point)
            grad = objective.gradient(point, ctx)
        except RadialLFError as e:
            self.logger.error(f"{net.name}: initialization failed: {e}")
            report.failure = e
            return report

        f = objective.value(point)
        report.point = point
        report.initial_f = f
        report.initial_grad_norm = grad.norm()
        self.logger.info(f"{net.name}: {self.method} from {cfg.init.value} start, f0 = {f:.3e}")
        if grad.norm() <= cfg.eps_grad:
            report.converged = True
            self.logger.info(f"{net.name}: initial point already stationary")
            return report

        def retraction(target):
            return retract(kind, net, target)

        growth = 0
        for k in range(1, cfg.max_iter + 1):
            tick = time.perf_counter()
            try:
                xi = self.direction(objective, point, grad, ctx)
                if self.line_search:
                    step = armijo(objective.value, retraction, point, xi, grad, cfg.armijo, f_x=f)
                    new_point, new_f, alpha = step.point, step.value, step.step
                else:
                    new_point = retraction(as_vector(point) + as_vector(xi))
                    new_f, alpha = objective.value(new_point), 1.0
                ctx = objective.projection(new_point)
                grad = objective.gradient(new_point, ctx)
            except RadialLFError as e:
                self.logger.warning(f"{net.name}: iteration {k} failed: {e}")
                report.failure = e
                return report

            dv = max_voltage_change(point.v, new_point.v)
            record = IterationRecord(
                iteration=k,
                f=new_f,
                grad_norm=grad.norm(),
                max_dv=dv,
                step=alpha,
                time_ms=1e3 * (time.perf_counter() - tick),
            )
            report.record(record)
            self.logger.debug(
                f"iter {k}: f={new_f:.6e} |grad|={record.grad_norm:.3e} dv={dv:.3e} step={alpha:.3g}"
            )
            growth = growth + 1 if new_f > f else 0
            done = stop_check(point, new_point, grad, cfg)
            point, f = new_point, new_f
            report.point = point
            if done:
                report.converged = True
                self.logger.info(f"{net.name}: {self.method} converged in {k} iterations, f = {f:.3e}")
                return report
            if self.divergence_window and growth >= self.divergence_window:
                report.failure = Diverged(f"objective grew for {growth} consecutive iterations")
                self.logger.warning(f"{net.name}: {report.failure}")
                return report

        report.failure = MaxIterExceeded(f"no convergence within {cfg.max_iter} iterations")
        self.logger.warning(f"{net.name}: {report.failure}")
        return report


# Direction finders

def gradient_direction(objective: Objective, point, grad: TangentVector, ctx) -> TangentVector:
    return -grad


def _solve_square(matrix: sp.spmatrix, rhs: np.ndarray, what: str) -> np.ndarray:
    try:
        solution = splu(sp.csc_matrix(matrix)).solve(rhs)
    except RuntimeError as e:
        raise SingularDirectionSystem(f"{what} system is singular ({e})")
    if not np.all(np.isfinite(solution)):
        raise SingularDirectionSystem(f"{what} system produced non-finite values")
    return solution


def pan_direction_qe(net: RadialNetwork, sys: FlowLinearSystem, u) -> TangentVector:
    """Tangent step zeta with A (u + zeta) = b"""
    data = as_vector(u)
    n = net.node_count
    matrix = sp.vstack([qe_differential(net, data), sys.A])
    rhs = np.concatenate([np.zeros(n), sys.b - sys.A @ data])
    return TangentVector(Manifold.QE, _solve_square(matrix, rhs, "QE direction"), u)


def pan_direction_bfm(net: RadialNetwork, x) -> TangentVector:
    """Tangent step xi = (zeta, eta) with w + eta = w_bar"""
    data = as_vector(x)
    n = net.node_count
    select = sp.hstack([sp.csr_matrix((2 * n, 4 * n)), sp.identity(2 * n)])
    matrix = sp.vstack([bfm_differential(net, data), select])
    rhs = np.concatenate([np.zeros(4 * n), net.w_bar - data[4 * n:]])
    return TangentVector(Manifold.BFM, _solve_square(matrix, rhs, "BFM direction"), x)


def approximate_newton_direction(objective: Objective, point, grad: TangentVector, ctx) -> TangentVector:
    if objective.manifold is Manifold.BFM:
        return pan_direction_bfm(objective.net, point)
    return pan_direction_qe(objective.net, objective.sys, point)


# Entry points

def _solver_name(prefix: str, manifold: Manifold) -> str:
    return f"{prefix}-{manifold.value}"


def solve_gd(manifold: Manifold, net: RadialNetwork, cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Riemannian gradient descent with Armijo steps"""
    name = _solver_name("gd", manifold)
    cfg = cfg or SolverConfig.for_method(name)
    return RiemannianSolver(name, manifold, gradient_direction).solve(net, cfg)


def solve_pan(manifold: Manifold, net: RadialNetwork, cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Approximate Newton: tangent mismatch-closing direction with Armijo steps"""
    name = _solver_name("pan", manifold)
    cfg = cfg or SolverConfig.for_method(name)
    return RiemannianSolver(name, manifold, approximate_newton_direction).solve(net, cfg)


def pan_first_iteration(net: RadialNetwork, cfg: Optional[SolverConfig] = None):
    """QE point after one full approximate Newton step from the configured start"""
    cfg = cfg or SolverConfig.for_method("pan-qe")
    kind = retraction_for(Manifold.QE, cfg.retraction)
    sys = linear_part(net)
    u = initial_point(net, Manifold.QE, cfg.init)
    zeta = pan_direction_qe(net, sys, u)
    return retract(kind, net, as_vector(u) + zeta.data)

