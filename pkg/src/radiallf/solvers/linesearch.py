"""
Armijo backtracking along a retraction
"""

import logging
from typing import Callable, NamedTuple, Optional

import numpy as np

from ..errors import LineSearchFailed, RetractionError
from ..manifold import as_vector
from .config import ArmijoConfig

logger = logging.getLogger("radiallf.solvers.linesearch")


class ArmijoStep(NamedTuple):
    m: int
    point: object
    step: float
    value: float


def armijo(
    f_eval: Callable[[object], float],
    retraction: Callable[[np.ndarray], object],
    x,
    xi,
    grad,
    cfg: ArmijoConfig,
    f_x: Optional[float] = None,
) -> ArmijoStep:
    """Smallest m with f(x) - f(R(t xi)) >= -sigma t <grad, xi>, t = alpha_bar beta^m"""
    base = as_vector(x)
    direction = as_vector(xi)
    slope = float(np.dot(as_vector(grad), direction))
    if slope >= 0:
        logger.warning(f"line search along a non-descent direction (slope {slope:.3e})")
    f_x = f_eval(x) if f_x is None else f_x

    step = cfg.alpha_bar
    for m in range(cfg.max_backtracks + 1):
        try:
            candidate = retraction(base + step * direction)
        except RetractionError as e:
            logger.debug(f"m={m}: retraction failed ({e})")
            step *= cfg.beta
            continue
        value = f_eval(candidate)
        if np.isfinite(value) and f_x - value >= -cfg.sigma * step * slope:
            if m:
                logger.debug(f"accepted step {step:.3e} after {m} backtracks")
            return ArmijoStep(m=m, point=candidate, step=step, value=value)
        step *= cfg.beta
    raise LineSearchFailed(f"no sufficient decrease within {cfg.max_backtracks} backtracks")
