"""
radiallf: load flow for radial distribution networks by Riemannian optimization
"""

from .errors import RadialLFError
from .grid import RadialNetwork, load_matpower, parse_network_json
from .runner import RunSpec, compare_methods, run_method

__version__ = "0.1.0"

__all__ = [
    "RadialLFError",
    "RadialNetwork",
    "RunSpec",
    "compare_methods",
    "load_matpower",
    "parse_network_json",
    "run_method",
]
