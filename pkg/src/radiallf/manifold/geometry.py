"""
Residuals, differentials, projections and Riemannian derivatives
"""

import logging
import weakref
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, splu

from ..errors import DimensionMismatch, RankDeficient
from ..grid import RadialNetwork
from .points import Manifold, TangentVector, as_vector

logger = logging.getLogger("radiallf.manifold")


def _check_size(net: RadialNetwork, vector: np.ndarray, blocks: int, what: str) -> np.ndarray:
    if vector.shape[0] != blocks * net.node_count:
        raise DimensionMismatch(
            f"{what} has {vector.shape[0]} entries, expected {blocks * net.node_count} for J = {net.node_count}"
        )
    return vector


def _upstream_values(net: RadialNetwork, block: np.ndarray, root_value: float = 0.0) -> np.ndarray:
    """Values of `block` at each branch's upstream node; `root_value` for root lines"""
    out = np.full(block.shape, root_value, dtype=float)
    inner = ~net.is_root_line
    out[inner] = block[net.upstream[inner]]
    return out


# Linear part Au = b

@dataclass(frozen=True, eq=False)
class FlowLinearSystem:
    """The real-balance, reactive-balance and voltage-drop families as Au = b"""
    A: sp.csr_matrix
    b: np.ndarray

    @property
    def node_count(self) -> int:
        return self.A.shape[0] // 3

    def residual(self, u) -> np.ndarray:
        return self.A @ as_vector(u) - self.b

    def objective(self, u) -> float:
        r = self.residual(u)
        return float(r @ r)


_FLOW_MATRICES = weakref.WeakKeyDictionary()  # RadialNetwork -> A


def _flow_matrix(net: RadialNetwork) -> sp.csr_matrix:
    """A of `net`, cached for as long as the network is alive"""
    cached = _FLOW_MATRICES.get(net)
    if cached is None:
        cached = _FLOW_MATRICES[net] = _assemble_flow_matrix(net)
    return cached


def _assemble_flow_matrix(net: RadialNetwork) -> sp.csr_matrix:
    n = net.node_count
    k = np.arange(n)
    inner = np.flatnonzero(~net.is_root_line)
    up = net.upstream[inner]
    a2 = net.tap2
    blocks = [
        # real balance
        (k, k, -np.ones(n)),
        (up, inner, np.ones(inner.size)),
        (k, 2 * n + k, a2 * net.r),
        (k, 3 * n + k, net.g),
        # reactive balance
        (n + k, n + k, -np.ones(n)),
        (n + up, n + inner, np.ones(inner.size)),
        (n + k, 2 * n + k, a2 * net.x),
        (n + k, 3 * n + k, -net.b),
        # voltage drop
        (2 * n + k, k, 2 * net.r),
        (2 * n + k, n + k, 2 * net.x),
        (2 * n + k, 2 * n + k, -a2 * net.z2),
        (2 * n + k, 3 * n + k, np.ones(n)),
        (2 * n + inner, 3 * n + up, -1.0 / a2[inner]),
    ]
    rows = np.concatenate([blk[0] for blk in blocks])
    cols = np.concatenate([blk[1] for blk in blocks])
    vals = np.concatenate([blk[2] for blk in blocks])
    return sp.csr_matrix((vals, (rows, cols)), shape=(3 * n, 4 * n))


def _drop_rhs(net: RadialNetwork) -> np.ndarray:
    return np.where(net.is_root_line, net.v0 / net.tap2, 0.0)


def linear_part(net: RadialNetwork) -> FlowLinearSystem:
    """Assemble A (3J x 4J) and b of the linear BFM families"""
    A = _flow_matrix(net)
    try:
        splu((A @ A.T).tocsc())
    except RuntimeError as e:
        raise RankDeficient(f"{net.name}: flow matrix is rank deficient ({e})")
    b = np.concatenate([net.p, net.q, _drop_rhs(net)])
    return FlowLinearSystem(A=A, b=b)


# Residuals and differentials

def qe_residual(net: RadialNetwork, u) -> np.ndarray:
    """Per-line cone residual P^2 + Q^2 - v_i l"""
    u = _check_size(net, as_vector(u), 4, "QE point")
    n = net.node_count
    P, Q, l, v = u[:n], u[n:2 * n], u[2 * n:3 * n], u[3 * n:]
    return P ** 2 + Q ** 2 - net.upstream_voltage(v) * l


def bfm_residual(net: RadialNetwork, x) -> np.ndarray:
    """Stacked residuals of the four BFM families at x"""
    x = _check_size(net, as_vector(x), 6, "BFM point")
    n = net.node_count
    u, w = x[:4 * n], x[4 * n:]
    linear = _flow_matrix(net) @ u - np.concatenate([w, _drop_rhs(net)])
    return np.concatenate([linear, qe_residual(net, u)])


def _cone_jacobian(net: RadialNetwork, u: np.ndarray, v0: float, width: int) -> sp.csr_matrix:
    n = net.node_count
    P, Q, l, v = u[:n], u[n:2 * n], u[2 * n:3 * n], u[3 * n:]
    k = np.arange(n)
    inner = np.flatnonzero(~net.is_root_line)
    v_up = _upstream_values(net, v, v0)
    rows = np.concatenate([k, k, k, inner])
    cols = np.concatenate([k, n + k, 2 * n + k, 3 * n + net.upstream[inner]])
    vals = np.concatenate([2 * P, 2 * Q, -v_up, -l[inner]])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, width))


def qe_differential(net: RadialNetwork, u) -> sp.csr_matrix:
    """J x 4J differential of the cone equations"""
    u = _check_size(net, as_vector(u), 4, "QE point")
    return _cone_jacobian(net, u, net.v0, 4 * net.node_count)


def bfm_differential(net: RadialNetwork, x) -> sp.csr_matrix:
    """4J x 6J differential of the BFM defining map"""
    x = _check_size(net, as_vector(x), 6, "BFM point")
    n = net.node_count
    injections = sp.vstack([-sp.identity(2 * n), sp.csr_matrix((n, 2 * n))])
    linear = sp.hstack([_flow_matrix(net), injections])
    cone = _cone_jacobian(net, x[:4 * n], net.v0, 6 * n)
    return sp.vstack([linear, cone]).tocsr()


# Projection

class ProjectionContext:
    """Orthogonal projection onto the null space of a full-row-rank differential"""

    def __init__(self, jacobian: sp.spmatrix, manifold: Optional[Manifold] = None):
        self.jacobian = sp.csr_matrix(jacobian)
        m, n = self.jacobian.shape
        self.manifold = manifold or (Manifold.QE if n == 4 * m else Manifold.BFM)
        gram = (self.jacobian @ self.jacobian.T).tocsc()
        try:
            self._lu = splu(gram)
        except RuntimeError as e:
            raise RankDeficient(f"differential is rank deficient ({e})")
        logger.debug(f"factorized {m}x{m} Gram matrix ({gram.nnz} nonzeros)")

    @property
    def dimension(self) -> int:
        return self.jacobian.shape[1]

    def solve_gram(self, z: np.ndarray) -> np.ndarray:
        """(Dh Dh^T)^-1 z"""
        out = self._lu.solve(np.asarray(z, dtype=float))
        if not np.all(np.isfinite(out)):
            raise RankDeficient("Gram solve produced non-finite values")
        return out

    def multipliers(self, y: np.ndarray) -> np.ndarray:
        """Coefficients of the normal component of y in the rows of Dh"""
        return self.solve_gram(self.jacobian @ y)

    def project(self, y) -> np.ndarray:
        """Pi y = y - Dh^T (Dh Dh^T)^-1 Dh y, column-wise for 2-D input"""
        y = np.asarray(as_vector(y), dtype=float)
        if y.shape[0] != self.dimension:
            raise DimensionMismatch(f"vector has {y.shape[0]} entries, expected {self.dimension}")
        return y - self.jacobian.T @ self.multipliers(y)


def qe_projection(net: RadialNetwork, u) -> ProjectionContext:
    return ProjectionContext(qe_differential(net, u), Manifold.QE)


def bfm_projection(net: RadialNetwork, x) -> ProjectionContext:
    return ProjectionContext(bfm_differential(net, x), Manifold.BFM)


def project_tangent(ctx: ProjectionContext, y, base=None) -> TangentVector:
    """Orthogonal projection of y onto the tangent space behind `ctx`"""
    return TangentVector(ctx.manifold, ctx.project(y), base)


# Objectives and gradients

def objective_bfm(x, w_bar: np.ndarray) -> float:
    """Squared injection mismatch ||w - w_bar||^2"""
    x = as_vector(x)
    w_bar = np.asarray(w_bar, dtype=float)
    if x.size != 3 * w_bar.size:
        raise DimensionMismatch(f"BFM point of size {x.size} does not match {w_bar.size} injections")
    mismatch = x[x.size - w_bar.size:] - w_bar
    return float(mismatch @ mismatch)


def objective_qe(sys: FlowLinearSystem, u) -> float:
    """Squared linear mismatch ||Au - b||^2"""
    return sys.objective(u)


def _bfm_egrad(net: RadialNetwork, x: np.ndarray) -> np.ndarray:
    n = net.node_count
    egrad = np.zeros(6 * n)
    egrad[4 * n:] = 2.0 * (x[4 * n:] - net.w_bar)
    return egrad


def _qe_egrad(sys: FlowLinearSystem, u: np.ndarray) -> np.ndarray:
    return 2.0 * (sys.A.T @ sys.residual(u))


def grad_bfm(net: RadialNetwork, x, ctx: Optional[ProjectionContext] = None) -> TangentVector:
    """Riemannian gradient of the injection mismatch on the BFM manifold"""
    data = _check_size(net, as_vector(x), 6, "BFM point")
    ctx = ctx or bfm_projection(net, data)
    return TangentVector(Manifold.BFM, ctx.project(_bfm_egrad(net, data)), x)


def grad_qe(sys: FlowLinearSystem, net: RadialNetwork, u, ctx: Optional[ProjectionContext] = None) -> TangentVector:
    """Riemannian gradient of ||Au - b||^2 on the QE manifold"""
    data = _check_size(net, as_vector(u), 4, "QE point")
    ctx = ctx or qe_projection(net, data)
    return TangentVector(Manifold.QE, ctx.project(_qe_egrad(sys, data)), u)


# Second-order information

class ConeCurvature:
    """Second derivatives of the cone equations inside a stacked differential.

    ``weighted(lam, Z)`` applies sum_j lam_j Hess(h_j) to Z and
    ``bilinear(Z, Y)`` returns Z^T Hess(h_j) Y for every row j. Linear rows of
    the differential have zero curvature.
    """

    def __init__(self, net: RadialNetwork, manifold: Manifold):
        self.net = net
        self.size = net.node_count
        self.row_offset = 3 * self.size if manifold is Manifold.BFM else 0
        self.rows = 4 * self.size if manifold is Manifold.BFM else self.size
        self.inner = np.flatnonzero(~net.is_root_line)
        self.up = net.upstream[self.inner]

    def _blocks(self, Z: np.ndarray):
        n = self.size
        return Z[:n], Z[n:2 * n], Z[2 * n:3 * n], Z[3 * n:4 * n]

    def _v_up(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v)
        out[self.inner] = v[self.up]
        return out

    def weighted(self, lam: np.ndarray, Z: np.ndarray) -> np.ndarray:
        n = self.size
        weights = lam[self.row_offset:self.row_offset + n]
        if Z.ndim == 2:
            weights = weights[:, None]
        P, Q, l, v = self._blocks(Z)
        out = np.zeros_like(Z, dtype=float)
        out[:n] = 2.0 * weights * P
        out[n:2 * n] = 2.0 * weights * Q
        out[2 * n:3 * n] = -weights * self._v_up(v)
        np.add.at(out, 3 * n + self.up, -(weights * l)[self.inner])
        return out

    def bilinear(self, Z: np.ndarray, Y: np.ndarray) -> np.ndarray:
        if Z.ndim == 2 and Y.ndim == 1:
            Y = Y[:, None]
        zP, zQ, zl, zv = self._blocks(Z)
        yP, yQ, yl, yv = self._blocks(Y)
        rows = 2.0 * zP * yP + 2.0 * zQ * yQ - zl * self._v_up(yv) - self._v_up(zv) * yl
        out = np.zeros((self.rows,) + rows.shape[1:])
        out[self.row_offset:self.row_offset + self.size] = rows
        return out


def projector_derivative(ctx: ProjectionContext, curvature: ConeCurvature, direction) -> LinearOperator:
    """Operator y -> D Pi[direction] y for the projector behind `ctx`"""
    zeta = as_vector(direction)
    jac = ctx.jacobian

    def apply(y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 2 and zeta.ndim == 1:
            return np.column_stack([apply(col) for col in y.T])
        lam = ctx.multipliers(y)
        tangent = y - jac.T @ lam
        normal = jac.T @ ctx.solve_gram(curvature.bilinear(zeta, tangent))
        return -ctx.project(curvature.weighted(lam, zeta)) - normal

    n = ctx.dimension
    return LinearOperator((n, n), matvec=apply, matmat=apply, dtype=float)


class RiemannianHessian:
    """Hessian operator of a smooth objective restricted to the manifold behind `ctx`"""

    def __init__(
        self,
        ctx: ProjectionContext,
        egrad: np.ndarray,
        ehess: Callable[[np.ndarray], np.ndarray],
        curvature: ConeCurvature,
    ):
        self.ctx = ctx
        self.egrad = egrad
        self.ehess = ehess
        self.curvature = curvature
        self.lam = ctx.multipliers(egrad)
        self.grad = egrad - ctx.jacobian.T @ self.lam

    def projector_term(self, Z) -> np.ndarray:
        """L Z = D Pi[Z] egrad, column-wise for 2-D input"""
        Z = np.asarray(as_vector(Z), dtype=float)
        jac = self.ctx.jacobian
        curved = self.curvature.weighted(self.lam, Z)
        normal = jac.T @ self.ctx.solve_gram(self.curvature.bilinear(Z, self.grad))
        return -self.ctx.project(curved) - normal

    def apply(self, Z) -> np.ndarray:
        """Projected Euclidean Hessian plus the projector derivative term"""
        Z = np.asarray(as_vector(Z), dtype=float)
        return self.ctx.project(self.ehess(Z) + self.projector_term(Z))


def qe_hessian(sys: FlowLinearSystem, net: RadialNetwork, u, ctx: Optional[ProjectionContext] = None) -> RiemannianHessian:
    data = _check_size(net, as_vector(u), 4, "QE point")
    ctx = ctx or qe_projection(net, data)
    A = sys.A

    def ehess(Z):
        return 2.0 * (A.T @ (A @ Z))

    return RiemannianHessian(ctx, _qe_egrad(sys, data), ehess, ConeCurvature(net, Manifold.QE))


def bfm_hessian(net: RadialNetwork, x, ctx: Optional[ProjectionContext] = None) -> RiemannianHessian:
    data = _check_size(net, as_vector(x), 6, "BFM point")
    ctx = ctx or bfm_projection(net, data)
    n = net.node_count

    def ehess(Z):
        out = np.zeros_like(Z, dtype=float)
        out[4 * n:] = 2.0 * Z[4 * n:]
        return out

    return RiemannianHessian(ctx, _bfm_egrad(net, data), ehess, ConeCurvature(net, Manifold.BFM))


def hess_qe_apply(sys: FlowLinearSystem, net: RadialNetwork, u, zeta,
                  ctx: Optional[ProjectionContext] = None) -> TangentVector:
    """Riemannian Hessian of f_QE at u applied to a tangent direction"""
    return TangentVector(Manifold.QE, qe_hessian(sys, net, u, ctx).apply(zeta), u)


def hess_bfm_apply(net: RadialNetwork, x, xi, ctx: Optional[ProjectionContext] = None) -> TangentVector:
    """Riemannian Hessian of f_BFM at x applied to a tangent direction"""
    return TangentVector(Manifold.BFM, bfm_hessian(net, x, ctx).apply(xi), x)
