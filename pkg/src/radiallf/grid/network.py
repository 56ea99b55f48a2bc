"""
Radial network model for radiallf
"""

import json
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from ..errors import BadTap, ConfigError, NetworkError, NotRadial, SchemaError, UnsupportedFeature

logger = logging.getLogger("radiallf.grid")


@dataclass(frozen=True)
class TopoOrder:
    """Root-to-leaf ordering of the branches of a radial network"""
    forward: Tuple[int, ...]
    children: Tuple[Tuple[int, ...], ...]

    def children_of(self, node: int) -> Tuple[int, ...]:
        """Branches whose upstream node is `node` (the set J'(node))"""
        return self.children[node]

    @cached_property
    def forward_index(self) -> np.ndarray:
        """0-based branch positions in forward order"""
        return np.asarray(self.forward, dtype=int) - 1

    @cached_property
    def backward_index(self) -> np.ndarray:
        """0-based branch positions in leaf-to-root order"""
        return self.forward_index[::-1].copy()

    @cached_property
    def levels(self) -> Tuple[np.ndarray, ...]:
        """0-based branch positions grouped by depth below the slack"""
        levels = []
        frontier = list(self.children[0])
        while frontier:
            levels.append(np.asarray(frontier, dtype=int) - 1)
            frontier = [c for j in frontier for c in self.children[j]]
        return tuple(levels)


@dataclass(frozen=True, eq=False)
class RadialNetwork:
    """Immutable per-unit model of a rooted radial feeder.

    Node 0 is the slack; branch j (1..J) ends at node j. Arrays are indexed by
    branch position k = j - 1, so ``parent[k]`` is the upstream node of branch
    k + 1 and ``p[k]`` is the known injection at node k + 1.
    """
    parent: np.ndarray
    r: np.ndarray
    x: np.ndarray
    tap: np.ndarray
    g: np.ndarray
    b: np.ndarray
    p: np.ndarray
    q: np.ndarray
    v0: float = 1.0
    base_mva: float = 1.0
    name: str = "network"
    source_ids: Tuple[Any, ...] = field(default=())

    def __post_init__(self):
        parent = np.array(self.parent, dtype=int).reshape(-1)
        size = parent.size
        object.__setattr__(self, "parent", parent)
        for attr in ("r", "x", "tap", "g", "b", "p", "q"):
            values = np.array(getattr(self, attr), dtype=float).reshape(-1)
            if values.size != size:
                raise NetworkError(f"field '{attr}' has {values.size} entries, expected {size}")
            values.setflags(write=False)
            object.__setattr__(self, attr, values)
        parent.setflags(write=False)
        object.__setattr__(self, "v0", float(self.v0))
        object.__setattr__(self, "base_mva", float(self.base_mva))
        object.__setattr__(self, "source_ids", tuple(self.source_ids))
        self._validate()

    def _validate(self):
        size = self.node_count
        if size == 0:
            raise NetworkError("network has no branches")
        if not self.v0 > 0:
            raise NetworkError(f"slack squared voltage must be positive, got {self.v0}")
        if self.source_ids and len(self.source_ids) != size + 1:
            raise NetworkError(f"expected {size + 1} source ids, got {len(self.source_ids)}")
        bad_tap = np.flatnonzero(~(self.tap > 0))
        if bad_tap.size:
            k = int(bad_tap[0])
            raise BadTap(f"branch {k + 1} has tap ratio {self.tap[k]}")
        degenerate = np.flatnonzero(self.r ** 2 + self.x ** 2 <= 0)
        if degenerate.size:
            raise NetworkError(f"branch {int(degenerate[0]) + 1} has zero series impedance")
        negative = np.flatnonzero(self.r < 0)
        if negative.size:
            logger.warning(f"{self.name}: negative resistance on branches {(negative + 1).tolist()}")
        if np.any(self.parent < 0) or np.any(self.parent > size):
            raise NotRadial("upstream node label out of range")
        own = np.flatnonzero(self.parent == np.arange(1, size + 1))
        if own.size:
            raise NotRadial(f"branch {int(own[0]) + 1} starts and ends at node {int(own[0]) + 1}",
                            branch=int(own[0]) + 1)
        reached = len(self.order.forward)
        if reached != size:
            seen = set(self.order.forward)
            missing = next(j for j in range(1, size + 1) if j not in seen)
            raise NotRadial(f"node {missing} is not reachable from the slack", node=missing)

    @property
    def node_count(self) -> int:
        """Number of non-slack nodes J"""
        return int(self.parent.size)

    @cached_property
    def upstream(self) -> np.ndarray:
        """0-based position of the upstream node's branch, -1 for root-adjacent lines"""
        up = self.parent - 1
        up.setflags(write=False)
        return up

    @cached_property
    def is_root_line(self) -> np.ndarray:
        return self.parent == 0

    @cached_property
    def tap2(self) -> np.ndarray:
        return self.tap ** 2

    @cached_property
    def z2(self) -> np.ndarray:
        """Squared series impedance magnitude r^2 + x^2"""
        return self.r ** 2 + self.x ** 2

    @cached_property
    def child_matrix(self) -> sp.csr_matrix:
        """Sparse J x J matrix C with (C @ P)[k] = sum of P over J'(k + 1)"""
        size = self.node_count
        inner = np.flatnonzero(~self.is_root_line)
        return sp.csr_matrix(
            (np.ones(inner.size), (self.upstream[inner], inner)), shape=(size, size)
        )

    @cached_property
    def order(self) -> TopoOrder:
        return _build_order(self.parent)

    @property
    def w_bar(self) -> np.ndarray:
        """Known injections stacked as (p, q)"""
        return np.concatenate([self.p, self.q])

    def upstream_voltage(self, v: np.ndarray) -> np.ndarray:
        """Squared voltage at the upstream node of every branch (v0 for root lines)"""
        v_up = np.full(self.node_count, self.v0)
        inner = ~self.is_root_line
        v_up[inner] = v[self.upstream[inner]]
        return v_up

    def node_label(self, node: int) -> Any:
        """Original bus label of an internal node"""
        if self.source_ids:
            return self.source_ids[node]
        return node


def _build_order(parent: np.ndarray) -> TopoOrder:
    size = parent.size
    children: List[List[int]] = [[] for _ in range(size + 1)]
    for k, i in enumerate(parent):
        if 0 <= i <= size:
            children[int(i)].append(k + 1)
    forward = []
    queue = deque(children[0])
    seen = set()
    while queue:
        j = queue.popleft()
        if j in seen:
            continue
        seen.add(j)
        forward.append(j)
        queue.extend(children[j])
    return TopoOrder(
        forward=tuple(forward),
        children=tuple(tuple(c) for c in children),
    )


def topo_order(net: RadialNetwork) -> TopoOrder:
    """Root-to-leaf branch order and the J'(.) child sets"""
    return net.order


def scale_loads(net: RadialNetwork, factor: float) -> RadialNetwork:
    """Scale all known injections by `factor`"""
    if not factor > 0:
        raise ConfigError(f"load scale must be positive, got {factor}")
    return replace(net, p=net.p * factor, q=net.q * factor)


# Assembly shared by the MATPOWER and JSON readers

@dataclass
class NodeData:
    """Nodal data in per-unit, keyed by an arbitrary id"""
    id: Any
    p: float = 0.0
    q: float = 0.0
    g: float = 0.0
    b: float = 0.0
    source_id: Any = None


@dataclass
class LineData:
    """Branch data in per-unit between two node ids"""
    from_id: Any
    to_id: Any
    r: float
    x: float
    tap: float = 1.0
    b_charging: float = 0.0
    index: int = 0


def assemble_radial(
    slack_id: Any,
    nodes: Sequence[NodeData],
    lines: Sequence[LineData],
    v0: float,
    base_mva: float = 1.0,
    name: str = "network",
) -> RadialNetwork:
    """Orient branches away from the slack, relabel nodes and aggregate shunts"""
    ids = [node.id for node in nodes]
    if slack_id not in ids:
        raise NotRadial(f"slack node {slack_id} not among the nodes", node=slack_id)
    graph = nx.Graph()
    graph.add_nodes_from(ids)
    for line in lines:
        if line.tap <= 0:
            raise BadTap(f"branch {line.index} ({line.from_id}-{line.to_id}) has tap ratio {line.tap}")
        if line.from_id == line.to_id or graph.has_edge(line.from_id, line.to_id):
            raise NotRadial(
                f"branch {line.index} ({line.from_id}-{line.to_id}) closes a loop", branch=line.index
            )
        graph.add_edge(line.from_id, line.to_id, index=line.index)

    if not nx.is_forest(graph):
        u, v = nx.find_cycle(graph)[0][:2]
        index = graph.edges[u, v]["index"]
        raise NotRadial(f"cycle through branch {index} ({u}-{v})", branch=index)
    if len(lines) != len(nodes) - 1:
        raise NotRadial(f"{len(lines)} branches for {len(nodes)} nodes, expected {len(nodes) - 1}")
    reachable = nx.node_connected_component(graph, slack_id)
    if len(reachable) != len(nodes):
        orphan = next(node_id for node_id in ids if node_id not in reachable)
        raise NotRadial(f"node {orphan} is disconnected from the slack", node=orphan)

    labels = _label_nodes(graph, slack_id, ids)
    size = len(nodes) - 1
    parent = np.zeros(size, dtype=int)
    r = np.zeros(size)
    x = np.zeros(size)
    tap = np.ones(size)
    g = np.zeros(size)
    b = np.zeros(size)
    p = np.zeros(size)
    q = np.zeros(size)

    depth = nx.single_source_shortest_path_length(graph, slack_id)
    for line in lines:
        upstream, downstream = line.from_id, line.to_id
        if depth[downstream] < depth[upstream]:
            if line.tap != 1.0:
                raise UnsupportedFeature(
                    f"branch {line.index} ({line.from_id}-{line.to_id}) points towards the slack "
                    f"with off-nominal tap {line.tap}"
                )
            upstream, downstream = downstream, upstream
        k = labels[downstream] - 1
        parent[k] = labels[upstream]
        r[k], x[k], tap[k] = line.r, line.x, line.tap
        half = 0.5 * line.b_charging
        b[k] += half
        if labels[upstream] != 0:
            b[labels[upstream] - 1] += half / line.tap ** 2

    for node in nodes:
        label = labels[node.id]
        if label == 0:
            if node.p or node.q:
                logger.debug(f"{name}: injection at slack node {node.id} ignored")
            continue
        p[label - 1] += node.p
        q[label - 1] += node.q
        g[label - 1] += node.g
        b[label - 1] += node.b

    source_ids = [None] * (size + 1)
    for node in nodes:
        source_ids[labels[node.id]] = node.source_id if node.source_id is not None else node.id
    return RadialNetwork(
        parent=parent, r=r, x=x, tap=tap, g=g, b=b, p=p, q=q,
        v0=v0, base_mva=base_mva, name=name, source_ids=tuple(source_ids),
    )


def _label_nodes(graph: nx.Graph, slack_id: Any, ids: Sequence[Any]) -> Dict[Any, int]:
    """Keep contiguous integer ids starting at the slack; otherwise number in BFS order"""
    if all(isinstance(i, (int, np.integer)) for i in ids):
        if set(ids) == set(range(slack_id, slack_id + len(ids))):
            return {i: int(i) - slack_id for i in ids}
    labels = {slack_id: 0}
    queue = deque([slack_id])
    while queue:
        node = queue.popleft()
        for neighbor in sorted(graph.neighbors(node), key=_sort_key):
            if neighbor not in labels:
                labels[neighbor] = len(labels)
                queue.append(neighbor)
    return labels


def _sort_key(value: Any):
    return (0, value, "") if isinstance(value, (int, float, np.integer)) else (1, 0, str(value))


# JSON schema

def parse_network_json(text: str) -> RadialNetwork:
    """Build a RadialNetwork from the JSON network schema"""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON ({e.msg} at line {e.lineno})")
    if not isinstance(doc, dict):
        raise SchemaError("document must be an object")

    base_mva = _number(doc, "base_mva", "$")
    v0 = _number(doc, "v0", "$")
    nodes_doc = _array(doc, "nodes", "$")
    lines_doc = _array(doc, "lines", "$")

    nodes: List[NodeData] = []
    seen: Dict[int, int] = {}
    for i, item in enumerate(nodes_doc):
        path = f"$.nodes[{i}]"
        if not isinstance(item, dict):
            raise SchemaError("node must be an object", path)
        node_id = _integer(item, "id", path)
        if node_id in seen:
            raise SchemaError(f"duplicate node id {node_id} (first at $.nodes[{seen[node_id]}])", f"{path}.id")
        seen[node_id] = i
        nodes.append(NodeData(
            id=node_id,
            p=_number(item, "p", path),
            q=_number(item, "q", path),
            g=_number(item, "g_shunt", path, default=0.0),
            b=_number(item, "b_shunt", path, default=0.0),
            source_id=item.get("source_id"),
        ))
    if 0 not in seen:
        raise SchemaError("slack node with id 0 is missing", "$.nodes")

    lines: List[LineData] = []
    for i, item in enumerate(lines_doc):
        path = f"$.lines[{i}]"
        if not isinstance(item, dict):
            raise SchemaError("line must be an object", path)
        from_id = _integer(item, "from", path)
        to_id = _integer(item, "to", path)
        for key, value in (("from", from_id), ("to", to_id)):
            if value not in seen:
                raise SchemaError(f"unknown node id {value}", f"{path}.{key}")
        lines.append(LineData(
            from_id=from_id,
            to_id=to_id,
            r=_number(item, "r", path),
            x=_number(item, "x", path),
            tap=_number(item, "tap", path, default=1.0),
            b_charging=_number(item, "b_charging", path, default=0.0),
            index=i + 1,
        ))

    return assemble_radial(0, nodes, lines, v0=v0, base_mva=base_mva, name=str(doc.get("name", "network")))


def network_to_json(net: RadialNetwork) -> str:
    """Serialize a RadialNetwork to the JSON network schema"""
    nodes = [{"id": 0, "p": 0.0, "q": 0.0, "g_shunt": 0.0, "b_shunt": 0.0}]
    for k in range(net.node_count):
        nodes.append({
            "id": k + 1,
            "p": float(net.p[k]),
            "q": float(net.q[k]),
            "g_shunt": float(net.g[k]),
            "b_shunt": float(net.b[k]),
        })
    if net.source_ids:
        for node in nodes:
            node["source_id"] = _plain(net.source_ids[node["id"]])
    lines = [
        {
            "from": int(net.parent[k]),
            "to": k + 1,
            "r": float(net.r[k]),
            "x": float(net.x[k]),
            "tap": float(net.tap[k]),
            "b_charging": 0.0,
        }
        for k in range(net.node_count)
    ]
    doc = {"name": net.name, "base_mva": net.base_mva, "v0": net.v0, "nodes": nodes, "lines": lines}
    return json.dumps(doc, indent=2)


def _plain(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _number(doc: Dict[str, Any], key: str, path: str, default: Optional[float] = None) -> float:
    if key not in doc:
        if default is None:
            raise SchemaError(f"missing field '{key}'", path)
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"expected a number, got {type(value).__name__}", f"{path}.{key}")
    return float(value)


def _integer(doc: Dict[str, Any], key: str, path: str) -> int:
    if key not in doc:
        raise SchemaError(f"missing field '{key}'", path)
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"expected an integer, got {type(value).__name__}", f"{path}.{key}")
    return value


def _array(doc: Dict[str, Any], key: str, path: str) -> List[Any]:
    if key not in doc:
        raise SchemaError(f"missing field '{key}'", path)
    value = doc[key]
    if not isinstance(value, list):
        raise SchemaError(f"expected an array, got {type(value).__name__}", f"{path}.{key}")
    return value


# Medium and high loading factors for the public radial cases
LOAD_SCENARIOS: Dict[str, Dict[str, float]] = {
    "case18": {"base": 1.0, "medium": 1.5, "high": 2.0},
    "case22": {"base": 1.0, "medium": 7.0, "high": 10.0},
    "case33bw": {"base": 1.0, "medium": 2.5, "high": 3.5},
    "case69": {"base": 1.0, "medium": 2.0, "high": 3.0},
    "case85": {"base": 1.0, "medium": 1.5, "high": 2.5},
    "case141": {"base": 1.0, "medium": 3.0, "high": 4.0},
}


def scenario_factor(case_name: str, scenario: str) -> float:
    """Load factor of a named scenario for a known case"""
    if scenario == "base":
        return 1.0
    factors = LOAD_SCENARIOS.get(case_name)
    if factors is None:
        raise ConfigError(f"no loading scenarios known for '{case_name}'")
    if scenario not in factors:
        raise ConfigError(f"unknown scenario '{scenario}', expected one of {sorted(factors)}")
    return factors[scenario]
