"""
Voltage magnitude comparison between solutions
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch


@dataclass
class ComparisonMetrics:
    """Node-wise |sqrt(v_a) - sqrt(v_b)| with its maximum and mean"""
    errors: np.ndarray
    max: float
    mean: float

    def within(self, tolerance: float) -> bool:
        return self.max <= tolerance


def solution_compare(a, b) -> ComparisonMetrics:
    """Compare two vectors of squared voltage magnitudes"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot compare voltages of shape {a.shape} and {b.shape}")
    errors = np.abs(np.sqrt(np.maximum(a, 0.0)) - np.sqrt(np.maximum(b, 0.0)))
    if errors.size == 0:
        return ComparisonMetrics(errors=errors, max=0.0, mean=0.0)
    return ComparisonMetrics(errors=errors, max=float(errors.max()), mean=float(errors.mean()))
