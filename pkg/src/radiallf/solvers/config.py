"""
Solver configuration for radiallf
"""

from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, Optional

from ..errors import ConfigError
from ..manifold import Manifold, RetractionKind


class InitKind(Enum):
    """Initial point construction"""
    FLAT = "flat"
    WARM = "warm"

    @classmethod
    def parse(cls, name: str) -> "InitKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise ConfigError(f"unknown init '{name}', expected one of {[k.value for k in cls]}")


# Methods and the manifold they iterate on
METHODS = ("gd-bfm", "gd-qe", "newton-qe", "pan-bfm", "pan-qe", "nr", "bfs", "lindistflow", "approx1")
BFM_METHODS = ("gd-bfm", "pan-bfm", "bfs")
QE_METHODS = ("gd-qe", "newton-qe", "pan-qe", "approx1")


def manifold_of_method(method: str) -> Optional[Manifold]:
    if method in BFM_METHODS:
        return Manifold.BFM
    if method in QE_METHODS:
        return Manifold.QE
    return None


@dataclass
class ArmijoConfig:
    """Backtracking parameters: steps alpha_bar * beta^m, sufficient decrease sigma"""
    alpha_bar: float = 1.0
    beta: float = 0.3
    sigma: float = 0.05
    max_backtracks: int = 50

    def __post_init__(self):
        if not self.alpha_bar > 0:
            raise ConfigError(f"alpha_bar must be positive, got {self.alpha_bar}")
        if not 0 < self.beta < 1:
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if not 0 < self.sigma < 1:
            raise ConfigError(f"sigma must lie in (0, 1), got {self.sigma}")
        if self.max_backtracks < 0:
            raise ConfigError(f"max_backtracks must be non-negative, got {self.max_backtracks}")


@dataclass
class SolverConfig:
    """Tolerances, iteration limits, line search, retraction and initialization"""
    eps_grad: float = 1e-6
    eps_volt: float = 1e-6
    armijo: ArmijoConfig = field(default_factory=ArmijoConfig)
    max_iter: int = 100000
    retraction: Optional[RetractionKind] = None
    init: InitKind = InitKind.WARM

    def __post_init__(self):
        if not self.eps_grad > 0:
            raise ConfigError(f"eps_grad must be positive, got {self.eps_grad}")
        if not self.eps_volt > 0:
            raise ConfigError(f"eps_volt must be positive, got {self.eps_volt}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be at least 1, got {self.max_iter}")
        if isinstance(self.retraction, str):
            self.retraction = RetractionKind.parse(self.retraction)
        if isinstance(self.init, str):
            self.init = InitKind.parse(self.init)

    @classmethod
    def for_method(cls, method: str, **overrides: Any) -> "SolverConfig":
        """Defaults for one method, optionally overridden"""
        if method not in METHODS:
            raise ConfigError(f"unknown method '{method}', expected one of {list(METHODS)}")
        manifold = manifold_of_method(method)
        retraction = None
        if manifold is Manifold.BFM:
            retraction = RetractionKind.BFM_SWEEP
        elif manifold is Manifold.QE:
            retraction = RetractionKind.QE_CURRENT
        alpha_bar = 4.5 if method == "gd-bfm" else 1.0
        config = cls(armijo=ArmijoConfig(alpha_bar=alpha_bar), retraction=retraction)
        return config.with_overrides(**overrides) if overrides else config

    def with_overrides(self, **overrides: Any) -> "SolverConfig":
        """Copy with top-level or Armijo fields replaced; None values are skipped"""
        armijo_keys = {f.name for f in fields(ArmijoConfig)}
        own_keys = {f.name for f in fields(SolverConfig)} - {"armijo"}
        armijo: Dict[str, Any] = {}
        own: Dict[str, Any] = {}
        for key, value in overrides.items():
            if value is None:
                continue
            if key in armijo_keys:
                armijo[key] = value
            elif key in own_keys:
                own[key] = value
            else:
                raise ConfigError(f"unknown solver setting '{key}'")
        return replace(self, armijo=replace(self.armijo, **armijo), **own)

    def check_method(self, method: str):
        """Reject retractions that do not belong to the method's manifold"""
        manifold = manifold_of_method(method)
        if manifold is None or self.retraction is None:
            return
        if self.retraction.manifold is not manifold:
            raise ConfigError(f"retraction {self.retraction.value} cannot be used with {method}")
