"""
Network data for radiallf
"""

from .network import (
    LOAD_SCENARIOS,
    RadialNetwork,
    TopoOrder,
    network_to_json,
    parse_network_json,
    scale_loads,
    scenario_factor,
    topo_order,
)
from .matpower import RawCase, load_matpower, parse_matpower, to_radial

__all__ = [
    "LOAD_SCENARIOS",
    "RadialNetwork",
    "RawCase",
    "TopoOrder",
    "load_matpower",
    "network_to_json",
    "parse_matpower",
    "parse_network_json",
    "scale_loads",
    "scenario_factor",
    "to_radial",
    "topo_order",
]
