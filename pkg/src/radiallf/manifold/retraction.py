"""
Retractions onto the BFM and QE manifolds
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, DegenerateCone, DimensionMismatch, NonPositiveVoltage
from ..grid import RadialNetwork, TopoOrder
from .points import BfmPoint, Manifold, QePoint, as_vector

logger = logging.getLogger("radiallf.manifold.retraction")

CONE_TOLERANCE = 1e-12


class RetractionKind(Enum):
    """Available retractions"""
    BFM_SWEEP = "bfm"
    QE_SPHERE = "qe1"
    QE_CURRENT = "qe2"

    @property
    def manifold(self) -> Manifold:
        return Manifold.BFM if self is RetractionKind.BFM_SWEEP else Manifold.QE

    @classmethod
    def parse(cls, name: str) -> "RetractionKind":
        for kind in cls:
            if name.lower() in (kind.value, kind.name.lower()):
                return kind
        raise ConfigError(f"unknown retraction '{name}', expected one of {[k.value for k in cls]}")


def retract_bfm(net: RadialNetwork, order: TopoOrder, x_tilde) -> BfmPoint:
    """Forward-sweep retraction: keep P, Q and recompute l, v, then p, q"""
    x_tilde = as_vector(x_tilde)
    n = net.node_count
    if x_tilde.size != 6 * n:
        raise DimensionMismatch(f"BFM target has {x_tilde.size} entries, expected {6 * n}")
    P = x_tilde[:n].copy()
    Q = x_tilde[n:2 * n].copy()
    l = np.empty(n)  # noqa: E741
    v = np.empty(n)
    for level in order.levels:
        up = net.upstream[level]
        v_up = np.where(up < 0, net.v0, v[np.maximum(up, 0)])
        bad = np.flatnonzero(v_up <= 0)
        if bad.size:
            line = int(level[bad[0]]) + 1
            raise NonPositiveVoltage(
                f"upstream squared voltage {v_up[bad[0]]:.3e} of line {line} during forward sweep", line=line
            )
        l[level] = (P[level] ** 2 + Q[level] ** 2) / v_up
        a2 = net.tap2[level]
        v[level] = (v_up / a2 - 2.0 * (net.r[level] * P[level] + net.x[level] * Q[level])
                    + a2 * net.z2[level] * l[level])
    p, q = solved_injections(net, P, Q, l, v)
    return BfmPoint(np.concatenate([P, Q, l, v, p, q]))


def solved_injections(net: RadialNetwork, P, Q, l, v) -> Tuple[np.ndarray, np.ndarray]:  # noqa: E741
    """Injections that close both balance families for given flows and voltages"""
    children = net.child_matrix
    p = children @ P - P + net.tap2 * net.r * l + net.g * v
    q = children @ Q - Q + net.tap2 * net.x * l - net.b * v
    return p, q


def _split_qe(net: RadialNetwork, u_tilde) -> Tuple[np.ndarray, ...]:
    u_tilde = as_vector(u_tilde)
    n = net.node_count
    if u_tilde.size != 4 * n:
        raise DimensionMismatch(f"QE target has {u_tilde.size} entries, expected {4 * n}")
    return u_tilde[:n], u_tilde[n:2 * n], u_tilde[2 * n:3 * n], u_tilde[3 * n:]


def retract_qe_sphere(net: RadialNetwork, u_tilde) -> QePoint:
    """Per-line normalization onto the cone P^2 + Q^2 = v_i l"""
    P, Q, l, v = _split_qe(net, u_tilde)
    v_up = net.upstream_voltage(v)
    D = np.sqrt(4.0 * P ** 2 + 4.0 * Q ** 2 + (l - v_up) ** 2)
    denominator = D - l + v_up
    bad = np.flatnonzero(denominator <= CONE_TOLERANCE)
    if bad.size:
        line = int(bad[0]) + 1
        raise DegenerateCone(f"line {line} maps to the cone apex (v_i = {v_up[bad[0]]:.3e})", line=line)
    scale = v_up / denominator
    return QePoint(np.concatenate([
        2.0 * P * scale,
        2.0 * Q * scale,
        (D + l - v_up) * scale,
        v.copy(),
    ]))


def retract_qe_current(net: RadialNetwork, u_tilde) -> QePoint:
    """Keep P, Q, v and set l = (P^2 + Q^2) / v_i"""
    P, Q, _, v = _split_qe(net, u_tilde)
    v_up = net.upstream_voltage(v)
    bad = np.flatnonzero(v_up <= 0)
    if bad.size:
        line = int(bad[0]) + 1
        raise NonPositiveVoltage(f"upstream squared voltage {v_up[bad[0]]:.3e} of line {line}", line=line)
    return QePoint(np.concatenate([P.copy(), Q.copy(), (P ** 2 + Q ** 2) / v_up, v.copy()]))


def retract(kind: RetractionKind, net: RadialNetwork, target):
    """Apply retraction `kind` to an ambient target point"""
    if kind is RetractionKind.BFM_SWEEP:
        return retract_bfm(net, net.order, target)
    if kind is RetractionKind.QE_SPHERE:
        return retract_qe_sphere(net, target)
    return retract_qe_current(net, target)


@dataclass
class RetractionCheck:
    """Centering and local rigidity of one retraction at one point"""
    kind: RetractionKind
    centering_error: float
    steps: Tuple[float, ...] = field(default_factory=tuple)
    defects: Tuple[float, ...] = field(default_factory=tuple)
    direction_norm: float = 0.0

    def shrinks_linearly(self, slack: float = 2.0, floor: float = 1e-9) -> bool:
        """True when defect(h) / h stays bounded over the checked steps"""
        pairs = sorted(zip(self.steps, self.defects), reverse=True)
        for (h1, d1), (h2, d2) in zip(pairs, pairs[1:]):
            if d2 > slack * d1 * (h2 / h1) + floor:
                return False
        return True

    def defect_at(self, h: float) -> float:
        return self.defects[self.steps.index(h)]


def check_retraction(
    kind: RetractionKind,
    net: RadialNetwork,
    x,
    xi,
    steps: Sequence[float] = (1e-3, 1e-4, 1e-5),
) -> RetractionCheck:
    """Measure the centering error and rigidity defects of `kind` at x along xi"""
    base = as_vector(x)
    direction = as_vector(xi)
    if base.size != direction.size:
        raise DimensionMismatch(f"point has {base.size} entries, direction {direction.size}")
    centering = float(np.max(np.abs(as_vector(retract(kind, net, base)) - base)))
    defects = []
    for h in steps:
        moved = as_vector(retract(kind, net, base + h * direction))
        defects.append(float(np.max(np.abs((moved - base) / h - direction))))
    check = RetractionCheck(
        kind=kind,
        centering_error=centering,
        steps=tuple(steps),
        defects=tuple(defects),
        direction_norm=float(np.linalg.norm(direction)),
    )
    logger.debug(f"{kind.value}: centering {centering:.2e}, defects {[f'{d:.2e}' for d in defects]}")
    return check


def retraction_for(manifold: Manifold, kind: Optional[RetractionKind] = None) -> RetractionKind:
    """Default retraction of a manifold, or validate a requested one"""
    if kind is None:
        return RetractionKind.BFM_SWEEP if manifold is Manifold.BFM else RetractionKind.QE_CURRENT
    if kind.manifold is not manifold:
        raise ConfigError(f"retraction {kind.value} does not apply to the {manifold.value} manifold")
    return kind
