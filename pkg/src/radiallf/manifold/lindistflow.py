"""
LinDistFlow: the linear families with all current terms dropped
"""

import logging
from typing import Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..errors import SingularSystem
from ..grid import RadialNetwork
from .geometry import linear_part

logger = logging.getLogger("radiallf.manifold.lindistflow")


def lindistflow_solve(net: RadialNetwork) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve the 3J x 3J lossless system for (P, Q, v)"""
    n = net.node_count
    sys = linear_part(net)
    keep = np.r_[0:2 * n, 3 * n:4 * n]
    reduced = sp.csc_matrix(sys.A[:, keep])
    try:
        solution = splu(reduced).solve(sys.b)
    except RuntimeError as e:
        raise SingularSystem(f"{net.name}: LinDistFlow system is singular ({e})")
    if not np.all(np.isfinite(solution)):
        raise SingularSystem(f"{net.name}: LinDistFlow solution is not finite")
    P, Q, v = solution[:n], solution[n:2 * n], solution[2 * n:]
    logger.debug(f"{net.name}: LinDistFlow min v {v.min():.6f}")
    return P, Q, v
