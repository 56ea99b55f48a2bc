"""
Error hierarchy for radiallf
"""

from typing import Optional


class RadialLFError(Exception):
    """Base class for all radiallf errors"""


# Network data

class NetworkError(RadialLFError):
    """Invalid or unsupported network data"""


class MalformedCase(NetworkError):
    """MATPOWER case text could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedFeature(NetworkError):
    """Case uses a feature outside the supported subset"""


class NotRadial(NetworkError):
    """Branch data does not form a tree rooted at the slack node"""

    def __init__(self, message: str, node: Optional[int] = None, branch: Optional[int] = None):
        self.node = node
        self.branch = branch
        super().__init__(message)


class BadTap(NetworkError):
    """Non-positive transformer tap ratio"""


class SchemaError(NetworkError):
    """JSON network document does not match the schema"""

    def __init__(self, message: str, path: str = "$"):
        self.path = path
        super().__init__(f"{path}: {message}")


# Numerics

class NumericalError(RadialLFError):
    """A linear system or factorization failed"""


class RankDeficient(NumericalError):
    """Differential or flow matrix lost full row rank"""


class SingularSystem(NumericalError):
    """LinDistFlow system is singular"""


class SingularDirectionSystem(NumericalError):
    """Approximate-Newton direction system is singular"""


class SingularHessian(NumericalError):
    """Newton equation has no unique tangent solution"""


class SingularJacobian(NumericalError):
    """Newton-Raphson Jacobian is singular"""


class RetractionError(NumericalError):
    """Retraction undefined at the requested tangent point"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(message)


class NonPositiveVoltage(RetractionError):
    """An upstream squared voltage is not strictly positive"""


class DegenerateCone(RetractionError):
    """Sphere retraction hits the cone apex"""


# Iteration outcomes

class ConvergenceError(RadialLFError):
    """Iterative method stopped without meeting the tolerances"""


class LineSearchFailed(ConvergenceError):
    """Armijo backtracking exhausted"""


class MaxIterExceeded(ConvergenceError):
    """Iteration limit reached"""


class Diverged(ConvergenceError):
    """Objective kept growing"""


# Misc

class DimensionMismatch(RadialLFError, ValueError):
    """Vectors of incompatible length"""


class ConfigError(RadialLFError, ValueError):
    """Invalid solver or run configuration"""
