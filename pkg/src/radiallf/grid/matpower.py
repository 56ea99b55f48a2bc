"""
MATPOWER case reader for radiallf
"""

import logging
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import BadTap, MalformedCase, UnsupportedFeature
from .network import LineData, NodeData, RadialNetwork, assemble_radial

logger = logging.getLogger("radiallf.grid.matpower")

# MATPOWER column indices (0-based)
BUS_I, BUS_TYPE, PD, QD, GS, BS, BUS_AREA, VM, VA, BASE_KV = range(10)
F_BUS, T_BUS, BR_R, BR_X, BR_B, RATE_A, RATE_B, RATE_C, TAP, SHIFT, BR_STATUS = range(11)
REF = 3
PV = 2

_MATRIX_START = re.compile(r"^\s*mpc\.(\w+)\s*=\s*\[(.*)$")
_SCALAR = re.compile(r"^\s*mpc\.baseMVA\s*=\s*([^;]+);?\s*$")
_FUNCTION = re.compile(r"^\s*function\s+(?:\w+\s*=\s*)?(\w+)")
_OHMS = "mpc.branch(:,[BR_RBR_X])=mpc.branch(:,[BR_RBR_X])/(Vbase^2/Sbase);"
_KILOWATTS = "mpc.bus(:,[PD,QD])=mpc.bus(:,[PD,QD])/1e3;"
_VBASE = re.compile(r"^Vbase=mpc\.bus\(1,BASE_KV\)\*1e3;$")
_SBASE = re.compile(r"^Sbase=mpc\.baseMVA\*1e6;$")


@dataclass
class RawCase:
    """Bus and in-service branch data as read from a case file.

    ``bus`` columns: id, type, Pd, Qd, Gs, Bs, baseKV, Vm.
    ``branch`` columns: from, to, r, x, b_charging, tap, status.
    """
    base_mva: float
    bus: np.ndarray
    branch: np.ndarray
    name: str = "case"
    bus_lines: Tuple[int, ...] = ()
    branch_lines: Tuple[int, ...] = ()

    @property
    def bus_count(self) -> int:
        return int(self.bus.shape[0])

    @property
    def branch_count(self) -> int:
        return int(self.branch.shape[0])

    @property
    def slack_id(self) -> int:
        return int(self.bus[self.bus[:, 1] == REF][0, 0])


def _strip_comment(line: str) -> str:
    in_string = False
    for i, char in enumerate(line):
        if char == "'":
            in_string = not in_string
        elif char == "%" and not in_string:
            return line[:i]
    return line


def _read_matrix(lines: List[Tuple[int, str]], start: int, first: str) -> Tuple[List[Tuple[int, List[float]]], int]:
    """Collect rows of a bracketed matrix starting on lines[start]"""
    rows: List[Tuple[int, List[float]]] = []
    index = start
    content = first
    number = lines[start][0]
    while True:
        closed = "]" in content
        body = content.split("]", 1)[0] if closed else content
        for chunk in body.split(";"):
            tokens = [t for t in re.split(r"[\s,]+", chunk.strip()) if t]
            if not tokens:
                continue
            try:
                rows.append((number, [float(t) for t in tokens]))
            except ValueError:
                bad = next(t for t in tokens if not _is_number(t))
                raise MalformedCase(f"non-numeric token '{bad}'", line=number)
        if closed:
            return rows, index
        index += 1
        if index >= len(lines):
            raise MalformedCase("unterminated matrix", line=lines[start][0])
        number, content = lines[index]


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _to_array(rows: List[Tuple[int, List[float]]], min_cols: int, width: int, what: str) -> np.ndarray:
    data = np.zeros((len(rows), width))
    for i, (number, values) in enumerate(rows):
        if len(values) < min_cols:
            raise MalformedCase(f"{what} row has {len(values)} columns, expected at least {min_cols}", line=number)
        count = min(len(values), width)
        data[i, :count] = values[:count]
        if len(values) <= BR_STATUS and what == "branch":
            data[i, BR_STATUS] = 1.0
    return data


def parse_matpower(text: str) -> RawCase:
    """Read baseMVA, bus and branch data from MATPOWER case text"""
    lines = [(n, _strip_comment(raw)) for n, raw in enumerate(text.splitlines(), start=1)]
    base_mva: Optional[float] = None
    name = "case"
    matrices: Dict[str, List[Tuple[int, List[float]]]] = {}
    statements: List[Tuple[int, str]] = []

    i = 0
    while i < len(lines):
        number, line = lines[i]
        if not line.strip():
            i += 1
            continue
        header = _FUNCTION.match(line)
        if header:
            name = header.group(1)
            i += 1
            continue
        scalar = _SCALAR.match(line)
        if scalar:
            try:
                base_mva = float(scalar.group(1))
            except ValueError:
                raise MalformedCase(f"non-numeric baseMVA '{scalar.group(1).strip()}'", line=number)
            i += 1
            continue
        matrix = _MATRIX_START.match(line)
        if matrix:
            rows, i = _read_matrix(lines, i, matrix.group(2))
            matrices[matrix.group(1)] = rows
            i += 1
            continue
        statements.append((number, re.sub(r"\s+", "", line)))
        i += 1

    if base_mva is None:
        raise MalformedCase("missing mpc.baseMVA")
    for required in ("bus", "branch"):
        if required not in matrices:
            raise MalformedCase(f"missing mpc.{required}")

    bus_rows = matrices["bus"]
    branch_rows = matrices["branch"]
    bus = _to_array(bus_rows, BASE_KV + 1, BASE_KV + 1, "bus")
    branch = _to_array(branch_rows, BR_X + 1, BR_STATUS + 1, "branch")

    ohms = kilowatts = False
    for number, statement in statements:
        if statement == _OHMS:
            ohms = True
        elif statement == _KILOWATTS:
            kilowatts = True
        elif _VBASE.match(statement) or _SBASE.match(statement):
            continue
        elif statement.startswith("mpc.version"):
            continue
        elif statement.startswith("mpc.") and "=" in statement:
            logger.warning(f"line {number}: ignoring statement '{statement}'")
    if ohms:
        vbase = bus[0, BASE_KV] * 1e3
        sbase = base_mva * 1e6
        if not vbase > 0:
            raise MalformedCase("Ohm conversion needs a positive BASE_KV on the first bus")
        branch[:, [BR_R, BR_X]] /= vbase ** 2 / sbase
    if kilowatts:
        bus[:, [PD, QD]] /= 1e3

    slack = np.flatnonzero(bus[:, BUS_TYPE] == REF)
    if slack.size > 1:
        ids = bus[slack, BUS_I].astype(int).tolist()
        raise UnsupportedFeature(f"{slack.size} reference buses {ids}, expected one")
    if slack.size == 0:
        raise MalformedCase("no reference bus (type 3)")
    if np.any(bus[:, BUS_TYPE] == PV):
        pv = bus[bus[:, BUS_TYPE] == PV, BUS_I].astype(int).tolist()
        logger.warning(f"{name}: PV buses {pv} treated as PQ buses")
    shifted = np.flatnonzero(branch[:, SHIFT] != 0)
    if shifted.size:
        number = branch_rows[int(shifted[0])][0]
        raise UnsupportedFeature(f"line {number}: phase-shifting transformers are not supported")

    in_service = branch[:, BR_STATUS] != 0
    dropped = int(np.count_nonzero(~in_service))
    if dropped:
        logger.debug(f"{name}: {dropped} out-of-service branches dropped")
    columns = [F_BUS, T_BUS, BR_R, BR_X, BR_B, TAP, BR_STATUS]
    raw = RawCase(
        base_mva=base_mva,
        bus=bus[:, [BUS_I, BUS_TYPE, PD, QD, GS, BS, BASE_KV, VM]],
        branch=branch[in_service][:, columns],
        name=name,
        bus_lines=tuple(n for n, _ in bus_rows),
        branch_lines=tuple(n for (n, _), keep in zip(branch_rows, in_service) if keep),
    )
    logger.info(f"parsed {name}: {raw.bus_count} buses, {raw.branch_count} in-service branches, "
                f"baseMVA {base_mva:g}")
    return raw


def to_radial(raw: RawCase) -> RadialNetwork:
    """Convert a parsed case into the per-unit radial model"""
    base = raw.base_mva
    bus = raw.bus
    slack_row = int(np.flatnonzero(bus[:, 1] == REF)[0])
    vm = bus[slack_row, 7]
    if not vm > 0:
        logger.warning(f"{raw.name}: slack Vm {vm} not positive, using 1.0")
        vm = 1.0

    nodes = [
        NodeData(
            id=int(row[0]),
            p=-row[2] / base,
            q=-row[3] / base,
            g=row[4] / base,
            b=row[5] / base,
        )
        for row in bus
    ]
    lines = []
    for k, row in enumerate(raw.branch):
        tap = row[5]
        if tap == 0:
            tap = 1.0
        if tap < 0:
            number = raw.branch_lines[k] if raw.branch_lines else None
            raise BadTap(f"branch {k + 1} ({int(row[0])}-{int(row[1])}) has tap ratio {tap}"
                         + (f" (line {number})" if number else ""))
        lines.append(LineData(
            from_id=int(row[0]),
            to_id=int(row[1]),
            r=row[2],
            x=row[3],
            tap=tap,
            b_charging=row[4],
            index=k + 1,
        ))
    net = assemble_radial(
        raw.slack_id, nodes, lines, v0=float(vm) ** 2, base_mva=base, name=raw.name,
    )
    logger.info(f"{raw.name}: radial network with J = {net.node_count}")
    return net


def load_matpower(path) -> RadialNetwork:
    """Read a MATPOWER case file straight into a RadialNetwork"""
    with open(path, "r", encoding="utf-8") as handle:
        return to_radial(parse_matpower(handle.read()))
