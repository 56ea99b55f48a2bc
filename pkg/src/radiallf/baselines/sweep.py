"""
Backward-forward sweep on the branch flow model
"""

import logging
import time
from typing import Optional

import numpy as np

from ..errors import Diverged, MaxIterExceeded, RadialLFError
from ..grid import RadialNetwork, TopoOrder
from ..manifold import Manifold, objective_bfm, retract_bfm
from ..solvers import IterationRecord, SolveReport, SolverConfig, initial_point, max_voltage_change

logger = logging.getLogger("radiallf.baselines.sweep")

DIVERGENCE_WINDOW = 50


def backward_sweep(net: RadialNetwork, order: TopoOrder, v: np.ndarray):
    """Leaf-to-root sending-end flows for frozen voltages and the known injections"""
    n = net.node_count
    children = net.child_matrix
    P = np.zeros(n)
    Q = np.zeros(n)
    l = np.zeros(n)  # noqa: E741
    for level in reversed(order.levels):
        P_down = (children @ P)[level] + net.g[level] * v[level] - net.p[level]
        Q_down = (children @ Q)[level] - net.b[level] * v[level] - net.q[level]
        a2 = net.tap2[level]
        l[level] = (P_down ** 2 + Q_down ** 2) / (a2 * v[level])
        P[level] = P_down + a2 * net.r[level] * l[level]
        Q[level] = Q_down + a2 * net.x[level] * l[level]
    return P, Q, l


def bfs_solve(net: RadialNetwork, order: Optional[TopoOrder] = None,
              cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Alternate backward sweeps and forward (retraction) sweeps until the mismatch settles"""
    order = order or net.order
    cfg = cfg or SolverConfig.for_method("bfs")
    report = SolveReport(method="bfs")
    try:
        x = initial_point(net, Manifold.BFM, cfg.init)
    except RadialLFError as e:
        report.failure = e
        return report

    w_bar = net.w_bar
    f = objective_bfm(x, w_bar)
    report.point = x
    report.initial_f = f
    report.initial_grad_norm = float(np.max(np.abs(x.w - w_bar)))
    logger.info(f"{net.name}: bfs from {cfg.init.value} start, f0 = {f:.3e}")

    growth = 0
    for k in range(1, cfg.max_iter + 1):
        tick = time.perf_counter()
        try:
            if np.any(x.v <= 0):
                raise Diverged(f"non-positive voltage at node {int(np.argmin(x.v)) + 1}")
            P, Q, l = backward_sweep(net, order, x.v)
            new_x = retract_bfm(net, order, np.concatenate([P, Q, l, x.v, net.p, net.q]))
        except RadialLFError as e:
            logger.warning(f"{net.name}: sweep {k} failed: {e}")
            report.failure = e
            return report

        new_f = objective_bfm(new_x, w_bar)
        mismatch = float(np.max(np.abs(new_x.w - w_bar)))
        dv = max_voltage_change(x.v, new_x.v)
        report.record(IterationRecord(
            iteration=k,
            f=new_f,
            grad_norm=mismatch,
            max_dv=dv,
            step=1.0,
            time_ms=1e3 * (time.perf_counter() - tick),
        ))
        logger.debug(f"sweep {k}: f={new_f:.6e} mismatch={mismatch:.3e} dv={dv:.3e}")
        growth = growth + 1 if new_f > f else 0
        x, f = new_x, new_f
        report.point = x
        if mismatch <= cfg.eps_grad and dv <= cfg.eps_volt:
            report.converged = True
            logger.info(f"{net.name}: bfs converged in {k} sweeps")
            return report
        if growth >= DIVERGENCE_WINDOW:
            report.failure = Diverged(f"mismatch grew for {growth} consecutive sweeps")
            logger.warning(f"{net.name}: {report.failure}")
            return report

    report.failure = MaxIterExceeded(f"no convergence within {cfg.max_iter} sweeps")
    logger.warning(f"{net.name}: {report.failure}")
    return report
