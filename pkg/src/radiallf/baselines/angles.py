"""
Voltage angle recovery from branch flow solutions
"""

import numpy as np

from ..errors import NonPositiveVoltage
from ..grid import RadialNetwork
from ..manifold import as_vector


def recover_angles(net: RadialNetwork, u) -> np.ndarray:
    """Nodal voltage angles (rad, slack first) implied by flows and squared voltages"""
    data = as_vector(u)
    n = net.node_count
    P, Q, v = data[:n], data[n:2 * n], data[3 * n:4 * n]
    if np.any(v <= 0):
        line = int(np.flatnonzero(v <= 0)[0]) + 1
        raise NonPositiveVoltage(f"node {line} has squared voltage {v[line - 1]:.3e}", line=line)
    v_up = net.upstream_voltage(v)
    shift = np.angle(v_up / net.tap2 - (net.r - 1j * net.x) * (P + 1j * Q))
    theta = np.zeros(n + 1)
    for level in net.order.levels:
        theta[level + 1] = theta[net.parent[level]] - shift[level]
    return theta
