"""
Solver state vectors for the BFM and QE manifolds
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from ..errors import DimensionMismatch


class Manifold(Enum):
    """Manifold a point or direction lives on"""
    BFM = "bfm"
    QE = "qe"

    @property
    def blocks(self) -> int:
        """Number of length-J blocks in a stacked vector"""
        return 6 if self is Manifold.BFM else 4


class _Stacked:
    """Block access for vectors stacked as (P, Q, l, v[, p, q])"""
    data: np.ndarray

    @property
    def size(self) -> int:
        return self.data.size // self._blocks

    def _block(self, index: int) -> np.ndarray:
        j = self.size
        return self.data[index * j:(index + 1) * j]

    @property
    def P(self) -> np.ndarray:
        return self._block(0)

    @property
    def Q(self) -> np.ndarray:
        return self._block(1)

    @property
    def l(self) -> np.ndarray:  # noqa: E743
        return self._block(2)

    @property
    def v(self) -> np.ndarray:
        return self._block(3)


def _checked(data, blocks: int, what: str) -> np.ndarray:
    values = np.array(data, dtype=float).reshape(-1)
    if values.size == 0 or values.size % blocks:
        raise DimensionMismatch(f"{what} needs a multiple of {blocks} entries, got {values.size}")
    return values


@dataclass(eq=False)
class QePoint(_Stacked):
    """u = (P, Q, l, v) in R^{4J}"""
    data: np.ndarray
    _blocks = 4

    def __post_init__(self):
        self.data = _checked(self.data, 4, "QE point")

    @classmethod
    def from_parts(cls, P, Q, l, v) -> "QePoint":  # noqa: E741
        return cls(np.concatenate([P, Q, l, v]))

    def with_injections(self, p, q) -> "BfmPoint":
        return BfmPoint(np.concatenate([self.data, p, q]))

    def copy(self) -> "QePoint":
        return QePoint(self.data.copy())


@dataclass(eq=False)
class BfmPoint(_Stacked):
    """x = (P, Q, l, v, p, q) in R^{6J}"""
    data: np.ndarray
    _blocks = 6

    def __post_init__(self):
        self.data = _checked(self.data, 6, "BFM point")

    @classmethod
    def from_parts(cls, P, Q, l, v, p, q) -> "BfmPoint":  # noqa: E741
        return cls(np.concatenate([P, Q, l, v, p, q]))

    @property
    def p(self) -> np.ndarray:
        return self._block(4)

    @property
    def q(self) -> np.ndarray:
        return self._block(5)

    @property
    def u(self) -> np.ndarray:
        return self.data[:4 * self.size]

    @property
    def w(self) -> np.ndarray:
        return self.data[4 * self.size:]

    def qe(self) -> QePoint:
        return QePoint(self.u.copy())

    def copy(self) -> "BfmPoint":
        return BfmPoint(self.data.copy())


Point = Union[QePoint, BfmPoint]


@dataclass(eq=False)
class TangentVector(_Stacked):
    """Direction in the tangent space of `manifold` at `base`"""
    manifold: Manifold
    data: np.ndarray
    base: Optional[Point] = None

    def __post_init__(self):
        self.data = _checked(self.data, self.manifold.blocks, f"{self.manifold.value} tangent vector")

    @property
    def _blocks(self) -> int:
        return self.manifold.blocks

    @property
    def eta_p(self) -> np.ndarray:
        if self.manifold is not Manifold.BFM:
            raise AttributeError("QE tangent vectors have no injection part")
        return self._block(4)

    @property
    def eta_q(self) -> np.ndarray:
        if self.manifold is not Manifold.BFM:
            raise AttributeError("QE tangent vectors have no injection part")
        return self._block(5)

    @property
    def zeta(self) -> np.ndarray:
        """Flow and voltage part (P, Q, l, v)"""
        return self.data[:4 * self.size]

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def inner(self, other) -> float:
        return float(np.dot(self.data, as_vector(other)))

    def __neg__(self) -> "TangentVector":
        return TangentVector(self.manifold, -self.data, self.base)

    def scaled(self, factor: float) -> "TangentVector":
        return TangentVector(self.manifold, factor * self.data, self.base)


def as_vector(value) -> np.ndarray:
    """Plain float array behind a point, tangent vector or array"""
    return np.asarray(getattr(value, "data", value), dtype=float)
