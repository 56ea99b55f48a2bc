"""
Flat and Warm initial points
"""

import logging

import numpy as np

from ..grid import RadialNetwork
from ..manifold import Manifold, lindistflow_solve, retract_bfm, retract_qe_current
from .config import InitKind

logger = logging.getLogger("radiallf.solvers.init")


def _retracted(net: RadialNetwork, manifold: Manifold, P, Q, v):
    n = net.node_count
    zeros = np.zeros(n)
    if manifold is Manifold.BFM:
        return retract_bfm(net, net.order, np.concatenate([P, Q, zeros, v, zeros, zeros]))
    return retract_qe_current(net, np.concatenate([P, Q, zeros, v]))


def init_flat(net: RadialNetwork, manifold: Manifold = Manifold.QE):
    """Zero flows and slack voltage everywhere, retracted onto the manifold"""
    zeros = np.zeros(net.node_count)
    return _retracted(net, manifold, zeros, zeros, np.full(net.node_count, net.v0))


def init_warm(net: RadialNetwork, manifold: Manifold = Manifold.QE):
    """LinDistFlow solution with zero currents, retracted onto the manifold"""
    P, Q, v = lindistflow_solve(net)
    return _retracted(net, manifold, P, Q, v)


def initial_point(net: RadialNetwork, manifold: Manifold, init: InitKind):
    point = init_warm(net, manifold) if init is InitKind.WARM else init_flat(net, manifold)
    if np.any(point.v <= 0):
        logger.warning(f"{net.name}: {init.value} start has non-positive voltages")
    return point
