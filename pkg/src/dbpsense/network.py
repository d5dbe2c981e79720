"""Water-distribution-network model and EPANET-format .inp parsing.

Only SI flow units (LPS) are supported: demands in L/s, lengths in m,
diameters in mm. Pumps and valves are retained as metadata; simulating a
network whose connectivity depends on them is rejected downstream.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable

from .errors import (
    DanglingReferenceError,
    DuplicateIdError,
    MalformedRowError,
    MissingSectionError,
    UnsupportedUnitsError,
)

NodeKind = str  # "junction" | "reservoir" | "tank"

# Sections parsed into the model; all others are carried as opaque metadata.
_MODEL_SECTIONS = {
    "TITLE", "JUNCTIONS", "RESERVOIRS", "TANKS", "PIPES", "PUMPS", "VALVES",
    "DEMANDS", "COORDINATES", "QUALITY", "REACTIONS", "OPTIONS", "TIMES",
}

DEFAULT_QUALITY_TIMESTEP_S = 300.0


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    elevation: float = 0.0
    base_demand: float = 0.0          # L/s, junctions only
    head: float | None = None         # m, fixed-head nodes only
    coord: tuple[float, float] | None = None
    initial_quality: float = 0.0      # mg/L

    @property
    def is_source(self) -> bool:
        return self.kind in ("reservoir", "tank")


@dataclass(frozen=True)
class Pipe:
    id: str
    from_node: str
    to_node: str
    length: float     # m
    diameter: float   # mm
    roughness: float  # Hazen-Williams C
    status: str = "open"  # "open" | "closed"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    node: str | None = None


@dataclass
class Network:
    nodes: dict[str, Node] = field(default_factory=dict)
    pipes: dict[str, Pipe] = field(default_factory=dict)
    unsupported_elements: list[tuple[str, str]] = field(default_factory=list)
    bulk_coeff: float = 0.0       # K_b, 1/hour
    reaction_order: float = 1.0
    quality_timestep: float = DEFAULT_QUALITY_TIMESTEP_S  # seconds
    title: str = ""
    # raw rows for sections we do not model, keyed by section name
    extra_sections: dict[str, list[str]] = field(default_factory=dict)
    # raw rows for pump/valve sections, re-emitted verbatim on serialization
    raw_unsupported: dict[str, list[str]] = field(default_factory=dict)
    options: dict[str, str] = field(default_factory=dict)

    def junctions(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind == "junction"]

    def sources(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.is_source]

    def node_ids(self) -> list[str]:
        return sorted(self.nodes)

    def adjacency(self, include_closed: bool = False) -> dict[str, list[tuple[str, str]]]:
        """Undirected adjacency: node id -> [(neighbor id, pipe id)]."""
        adj: dict[str, list[tuple[str, str]]] = {nid: [] for nid in self.nodes}
        for p in self.pipes.values():
            if p.status == "closed" and not include_closed:
                continue
            adj[p.from_node].append((p.to_node, p.id))
            adj[p.to_node].append((p.from_node, p.id))
        return adj


# ---------------------------------------------------------------------------
# Parsing


def _split_row(line: str) -> list[str]:
    return line.split(";", 1)[0].split()


def _num(token: str, line_no: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MalformedRowError(f"non-numeric {what} {token!r}", line_no) from None
    if not math.isfinite(value):
        raise MalformedRowError(f"non-finite {what} {token!r}", line_no)
    return value


def _parse_clock(token: str, line_no: int) -> float:
    """EPANET time value -> seconds. Accepts H:MM[:SS] or decimal hours."""
    if ":" in token:
        parts = token.split(":")
        if len(parts) not in (2, 3) or not all(p.isdigit() for p in parts):
            raise MalformedRowError(f"bad time value {token!r}", line_no)
        h, m = int(parts[0]), int(parts[1])
        s = int(parts[2]) if len(parts) == 3 else 0
        return h * 3600.0 + m * 60.0 + s
    return _num(token, line_no, "time value") * 3600.0

_TIME_UNIT_S = {"SEC": 1.0, "SECONDS": 1.0, "MIN": 60.0, "MINUTES": 60.0,
                "HOURS": 3600.0, "HR": 3600.0, "DAYS": 86400.0}


def parse_inp(text: str) -> Network:
    """Parse EPANET-style sectioned text into a validated-shape :class:`Network`.

    Raises :class:`MissingSectionError`, :class:`DanglingReferenceError`,
    :class:`MalformedRowError`, :class:`DuplicateIdError`, or
    :class:`UnsupportedUnitsError`, each carrying the offending line number.
    """
    net = Network()
    section: str | None = None
    coords: dict[str, tuple[float, float]] = {}
    quality: dict[str, float] = {}
    demands: dict[str, float] = {}
    demand_lines: dict[str, int] = {}
    pending_pipes: list[tuple[int, list[str]]] = []
    title_lines: list[str] = []

    def add_node(node: Node, line_no: int) -> None:
        if node.id in net.nodes:
            raise DuplicateIdError(f"duplicate node id {node.id!r}", line_no)
        net.nodes[node.id] = node

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise MalformedRowError(f"unterminated section header {line!r}", line_no)
            section = line[1:-1].strip().upper()
            continue
        if section is None:
            raise MalformedRowError(f"data before any section: {line!r}", line_no)

        if section not in _MODEL_SECTIONS:
            net.extra_sections.setdefault(section, []).append(line)
            continue

        row = _split_row(line)
        if not row:
            continue

        if section == "TITLE":
            title_lines.append(line)
        elif section == "JUNCTIONS":
            if len(row) < 2:
                raise MalformedRowError("junction row needs id and elevation", line_no)
            demand = _num(row[2], line_no, "demand") if len(row) >= 3 else 0.0
            if demand < 0:
                raise MalformedRowError(f"negative demand {demand}", line_no)
            add_node(Node(row[0], "junction",
                          elevation=_num(row[1], line_no, "elevation"),
                          base_demand=demand), line_no)
        elif section == "RESERVOIRS":
            if len(row) < 2:
                raise MalformedRowError("reservoir row needs id and head", line_no)
            head = _num(row[1], line_no, "head")
            add_node(Node(row[0], "reservoir", elevation=head, head=head), line_no)
        elif section == "TANKS":
            if len(row) < 3:
                raise MalformedRowError("tank row needs id, elevation, initial level", line_no)
            elev = _num(row[1], line_no, "elevation")
            init_level = _num(row[2], line_no, "initial level")
            add_node(Node(row[0], "tank", elevation=elev, head=elev + init_level), line_no)
        elif section == "PIPES":
            if len(row) < 6:
                raise MalformedRowError("pipe row needs id, nodes, length, diameter, roughness", line_no)
            pending_pipes.append((line_no, row))
        elif section in ("PUMPS", "VALVES"):
            if len(row) < 3:
                raise MalformedRowError(f"{section.lower()} row needs id and two nodes", line_no)
            net.unsupported_elements.append((section.lower(), row[0]))
            net.raw_unsupported.setdefault(section, []).append(line)
        elif section == "DEMANDS":
            if len(row) < 2:
                raise MalformedRowError("demand row needs node id and demand", line_no)
            value = _num(row[1], line_no, "demand")
            demands[row[0]] = demands.get(row[0], 0.0) + value
            demand_lines[row[0]] = line_no
        elif section == "COORDINATES":
            if len(row) < 3:
                raise MalformedRowError("coordinate row needs id, x, y", line_no)
            coords[row[0]] = (_num(row[1], line_no, "x"), _num(row[2], line_no, "y"))
        elif section == "QUALITY":
            if len(row) < 2:
                raise MalformedRowError("quality row needs id and value", line_no)
            quality[row[0]] = _num(row[1], line_no, "quality")
        elif section == "REACTIONS":
            key = " ".join(row[:2]).upper()
            if key == "GLOBAL BULK" and len(row) >= 3:
                # EPANET bulk coefficients are 1/day; the decay law carries the
                # minus sign, so only the magnitude is kept, converted to 1/h.
                net.bulk_coeff = abs(_num(row[2], line_no, "bulk coefficient")) / 24.0
            elif key == "ORDER BULK" and len(row) >= 3:
                net.reaction_order = _num(row[2], line_no, "reaction order")
            else:
                net.extra_sections.setdefault("REACTIONS", []).append(line)
        elif section == "OPTIONS":
            if len(row) >= 2:
                key = row[0].upper()
                net.options[key] = " ".join(row[1:])
                if key == "UNITS" and row[1].upper() != "LPS":
                    raise UnsupportedUnitsError(
                        f"unsupported flow units {row[1]!r}; only LPS is supported", line_no)
            else:
                net.options[row[0].upper()] = ""
        elif section == "TIMES":
            key = " ".join(row[:2]).upper()
            if key == "QUALITY TIMESTEP" and len(row) >= 3:
                seconds = _parse_clock(row[2], line_no)
                if len(row) >= 4 and row[3].upper() in _TIME_UNIT_S:
                    seconds = _num(row[2], line_no, "time value") * _TIME_UNIT_S[row[3].upper()]
                net.quality_timestep = seconds
            else:
                net.extra_sections.setdefault("TIMES", []).append(line)

    net.title = " ".join(title_lines)

    if not any(n.kind == "junction" for n in net.nodes.values()):
        raise MissingSectionError("no junctions defined")
    if not any(n.is_source for n in net.nodes.values()):
        raise MissingSectionError("no fixed-head node (reservoir or tank) defined")

    for line_no, row in pending_pipes:
        pid, a, b = row[0], row[1], row[2]
        if pid in net.pipes:
            raise DuplicateIdError(f"duplicate pipe id {pid!r}", line_no)
        for nid in (a, b):
            if nid not in net.nodes:
                raise DanglingReferenceError(f"pipe {pid!r} references unknown node {nid!r}", line_no)
        if a == b:
            raise MalformedRowError(f"pipe {pid!r} endpoints must be distinct", line_no)
        length = _num(row[3], line_no, "length")
        diameter = _num(row[4], line_no, "diameter")
        roughness = _num(row[5], line_no, "roughness")
        if length <= 0 or diameter <= 0 or roughness <= 0:
            raise MalformedRowError(
                f"pipe {pid!r} needs positive length, diameter and roughness", line_no)
        status = "open"
        # optional trailing columns: minor loss, then status (or status alone)
        for token in row[6:]:
            upper = token.upper()
            if upper in ("OPEN", "CV"):
                status = "open"
            elif upper == "CLOSED":
                status = "closed"
        net.pipes[pid] = Pipe(pid, a, b, length, diameter, roughness, status)

    for nid, value in demands.items():
        node = net.nodes.get(nid)
        if node is None:
            raise DanglingReferenceError(f"demand references unknown node {nid!r}",
                                         demand_lines[nid])
        if value < 0:
            raise MalformedRowError(f"negative demand {value}", demand_lines[nid])
        net.nodes[nid] = replace(node, base_demand=value)
    for nid, xy in coords.items():
        if nid in net.nodes:
            net.nodes[nid] = replace(net.nodes[nid], coord=xy)
    for nid, q in quality.items():
        if nid in net.nodes:
            net.nodes[nid] = replace(net.nodes[nid], initial_quality=q)

    return net


def parse_inp_file(path) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_inp(fh.read())


# ---------------------------------------------------------------------------
# Serialization (round-trips through parse_inp)


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_inp(net: Network) -> str:
    lines: list[str] = []
    if net.title:
        lines += ["[TITLE]", net.title, ""]

    junctions = [n for n in net.nodes.values() if n.kind == "junction"]
    reservoirs = [n for n in net.nodes.values() if n.kind == "reservoir"]
    tanks = [n for n in net.nodes.values() if n.kind == "tank"]

    lines.append("[JUNCTIONS]")
    lines += [f"{n.id}\t{_fmt(n.elevation)}\t{_fmt(n.base_demand)}" for n in junctions]
    lines.append("")
    if reservoirs:
        lines.append("[RESERVOIRS]")
        lines += [f"{n.id}\t{_fmt(n.head)}" for n in reservoirs]
        lines.append("")
    if tanks:
        lines.append("[TANKS]")
        # head = elevation + initial level; emit the level so parsing restores head
        lines += [f"{n.id}\t{_fmt(n.elevation)}\t{_fmt(n.head - n.elevation)}" for n in tanks]
        lines.append("")

    lines.append("[PIPES]")
    for p in net.pipes.values():
        lines.append(
            f"{p.id}\t{p.from_node}\t{p.to_node}\t{_fmt(p.length)}"
            f"\t{_fmt(p.diameter)}\t{_fmt(p.roughness)}\t{p.status.capitalize()}")
    lines.append("")

    for section in ("PUMPS", "VALVES"):
        if net.raw_unsupported.get(section):
            lines.append(f"[{section}]")
            lines += net.raw_unsupported[section]
            lines.append("")

    coords = [(n.id, n.coord) for n in net.nodes.values() if n.coord is not None]
    if coords:
        lines.append("[COORDINATES]")
        lines += [f"{nid}\t{_fmt(xy[0])}\t{_fmt(xy[1])}" for nid, xy in coords]
        lines.append("")

    qual = [(n.id, n.initial_quality) for n in net.nodes.values() if n.initial_quality != 0.0]
    if qual:
        lines.append("[QUALITY]")
        lines += [f"{nid}\t{_fmt(q)}" for nid, q in qual]
        lines.append("")

    lines.append("[REACTIONS]")
    lines.append(f"GLOBAL BULK {_fmt(-net.bulk_coeff * 24.0)}")
    lines.append(f"ORDER BULK {_fmt(net.reaction_order)}")
    lines += net.extra_sections.get("REACTIONS", [])
    lines.append("")

    if net.options:
        lines.append("[OPTIONS]")
        lines += [f"{k} {v}".rstrip() for k, v in net.options.items()]
        lines.append("")

    lines.append("[TIMES]")
    lines.append(f"QUALITY TIMESTEP {_fmt(net.quality_timestep / 3600.0)}")
    lines += net.extra_sections.get("TIMES", [])
    lines.append("")

    for section, rows in net.extra_sections.items():
        if section in ("REACTIONS", "TIMES"):
            continue
        lines.append(f"[{section}]")
        lines += rows
        lines.append("")

    lines.append("[END]")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Validation


def reachable_from_sources(net: Network, include_closed: bool = False) -> set[str]:
    adj = net.adjacency(include_closed=include_closed)
    seen: set[str] = set()
    queue = deque(n.id for n in net.sources())
    seen.update(queue)
    while queue:
        u = queue.popleft()
        for v, _pid in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def validate_network(net: Network) -> list[Diagnostic]:
    """Empty list iff all structural invariants hold; one diagnostic per violation."""
    diags: list[Diagnostic] = []

    reachable_open = reachable_from_sources(net, include_closed=False)
    reachable_any = reachable_from_sources(net, include_closed=True)
    for nid in sorted(net.nodes):
        node = net.nodes[nid]
        if node.kind != "junction":
            continue
        if nid not in reachable_any:
            diags.append(Diagnostic("disconnected", f"junction {nid} is unreachable from any fixed-head node", nid))
        elif nid not in reachable_open:
            diags.append(Diagnostic("isolated", f"junction {nid} is reachable only through closed pipes", nid))

    if net.junctions() and all(n.base_demand == 0.0 for n in net.junctions()):
        diags.append(Diagnostic("zero-demand", "network has no demand at any junction"))

    return diags


def count_rows(text: str, sections: Iterable[str]) -> int:
    """Data rows in the given sections, comments and blanks excluded.

    Independent of parse_inp; used to cross-check parsed element counts.
    """
    wanted = {s.upper() for s in sections}
    section = None
    count = 0
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().upper()
            continue
        if section in wanted and _split_row(line):
            count += 1
    return count
