"""
Polar Newton-Raphson load flow on the bus admittance matrix
"""

import logging
import time
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from ..errors import MaxIterExceeded, RadialLFError, SingularJacobian
from ..grid import RadialNetwork
from ..manifold import Manifold, QePoint
from ..solvers import InitKind, IterationRecord, SolveReport, SolverConfig, init_warm
from .angles import recover_angles

logger = logging.getLogger("radiallf.baselines.nr")


@dataclass
class PolarSolution:
    """Voltage magnitudes and angles (slack first) with the implied branch quantities"""
    vm: np.ndarray
    va: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    l: np.ndarray  # noqa: E741

    @property
    def v(self) -> np.ndarray:
        """Squared magnitudes of the non-slack nodes"""
        return self.vm[1:] ** 2

    def qe_point(self) -> QePoint:
        return QePoint.from_parts(self.P, self.Q, self.l, self.v)


def ybus_build(net: RadialNetwork) -> sp.csr_matrix:
    """Bus admittance matrix with the tap on the upstream side and nodal shunts"""
    n = net.node_count
    k = np.arange(n)
    i = net.parent
    j = k + 1
    y = 1.0 / (net.r + 1j * net.x)
    a = net.tap
    rows = np.concatenate([i, j, i, j, j])
    cols = np.concatenate([i, j, j, i, j])
    vals = np.concatenate([y / a ** 2, y, -y / a, -y / a, net.g + 1j * net.b])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))


def branch_quantities(net: RadialNetwork, V: np.ndarray):
    """Sending-end P, Q and the squared-current variable l of every branch"""
    a = net.tap
    V_send = V[net.parent] / a
    current = (V_send - V[1:]) / (net.r + 1j * net.x)
    S = V_send * np.conj(current)
    return S.real, S.imag, np.abs(current) ** 2 / a ** 2


def _jacobian(Y: sp.csr_matrix, V: np.ndarray, pq: np.ndarray) -> sp.csr_matrix:
    Ibus = Y @ V
    diagV = sp.diags(V)
    diagIbus = sp.diags(Ibus)
    diagVnorm = sp.diags(V / np.abs(V))
    dS_dVm = diagV @ (Y @ diagVnorm).conj() + diagIbus.conj() @ diagVnorm
    dS_dVa = 1j * diagV @ (diagIbus - Y @ diagV).conj()
    dS_dVa = sp.csr_matrix(dS_dVa)[pq][:, pq]
    dS_dVm = sp.csr_matrix(dS_dVm)[pq][:, pq]
    return sp.bmat([[dS_dVa.real, dS_dVm.real], [dS_dVa.imag, dS_dVm.imag]], format="csc")


def _mismatch(Y: sp.csr_matrix, V: np.ndarray, Sbus: np.ndarray, pq: np.ndarray) -> np.ndarray:
    mis = V * np.conj(Y @ V) - Sbus
    return np.concatenate([mis[pq].real, mis[pq].imag])


def _initial_voltage(net: RadialNetwork, init: InitKind) -> np.ndarray:
    n = net.node_count
    vm = np.full(n + 1, np.sqrt(net.v0))
    va = np.zeros(n + 1)
    if init is InitKind.WARM:
        u = init_warm(net, Manifold.QE)
        vm[1:] = np.sqrt(u.v)
        va = recover_angles(net, u)
    return vm * np.exp(1j * va)


def newton_raphson(net: RadialNetwork, init: InitKind = InitKind.FLAT,
                   cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Full polar Newton-Raphson; the final PolarSolution is in ``report.extra['polar']``"""
    cfg = cfg or SolverConfig.for_method("nr")
    report = SolveReport(method="nr")
    n = net.node_count
    pq = np.arange(1, n + 1)
    Y = ybus_build(net)
    Sbus = np.concatenate([[0.0], net.p + 1j * net.q])

    try:
        V = _initial_voltage(net, init)
    except RadialLFError as e:
        report.failure = e
        return report

    F = _mismatch(Y, V, Sbus, pq)
    report.initial_f = float(F @ F)
    report.initial_grad_norm = float(np.max(np.abs(F)))
    logger.info(f"{net.name}: nr from {init.value} start, |F| = {report.initial_grad_norm:.3e}")
    converged = report.initial_grad_norm <= cfg.eps_grad

    k = 0
    while not converged and k < cfg.max_iter:
        k += 1
        tick = time.perf_counter()
        jac = _jacobian(Y, V, pq)
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            try:
                dx = -spsolve(jac, F)
            except MatrixRankWarning:
                report.failure = SingularJacobian(f"Jacobian is singular at iteration {k}")
                break
        if not np.all(np.isfinite(dx)):
            report.failure = SingularJacobian(f"Newton update is not finite at iteration {k}")
            break
        vm = np.abs(V)
        va = np.angle(V)
        va[pq] += dx[:n]
        vm[pq] += dx[n:]
        V = vm * np.exp(1j * va)
        F = _mismatch(Y, V, Sbus, pq)
        norm = float(np.max(np.abs(F)))
        dv = float(np.max(np.abs(dx[n:])))
        report.record(IterationRecord(
            iteration=k,
            f=float(F @ F),
            grad_norm=norm,
            max_dv=dv,
            step=1.0,
            time_ms=1e3 * (time.perf_counter() - tick),
        ))
        logger.debug(f"iter {k}: |F|={norm:.3e} dVm={dv:.3e}")
        converged = norm <= cfg.eps_grad and dv <= cfg.eps_volt

    P, Q, l = branch_quantities(net, V)
    polar = PolarSolution(vm=np.abs(V), va=np.angle(V), P=P, Q=Q, l=l)
    report.extra["polar"] = polar
    report.point = polar.qe_point()
    report.converged = converged
    if not converged and report.failure is None:
        report.failure = MaxIterExceeded(f"no convergence within {cfg.max_iter} iterations")
    if report.failure is not None:
        logger.warning(f"{net.name}: {report.failure}")
    else:
        logger.info(f"{net.name}: nr converged in {report.iterations} iterations")
    return report
