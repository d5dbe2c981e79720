#!/usr/bin/env python3
"""Regenerate the bundled synthetic networks and example datasets.

Everything is seeded, so rerunning this script reproduces the committed
files byte for byte.  Three networks are produced:

  demo.inp         11 nodes  — smoke tests and the worked example
  branched227.inp  227 nodes — case-study-scale dead-end tree
  grid1000.inp     1000 nodes — scalability runs (tree + 25 cross links)

plus a complete hourly week of demo observations, contract tables, and
the downloadable input templates.
"""

from __future__ import annotations

import sys
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "src" / "dbpsense" / "data"
sys.path.insert(0, str(ROOT / "src"))

from dbpsense.envdata import CORE_HEADER  # noqa: E402
from dbpsense.hydraulics import solve_flows  # noqa: E402
from dbpsense.network import parse_inp  # noqa: E402


def build_tree(rng: np.random.Generator, n_junctions: int, max_children: int = 3):
    """Random rooted tree: parent[i] < i, with a branching cap."""
    parent = [-1] * n_junctions  # -1 means the reservoir
    children = {-1: 0}
    for i in range(n_junctions):
        if i == 0:
            children[0] = 0
            continue
        while True:
            p = int(rng.integers(0, i))
            if children[p] < max_children:
                break
        parent[i] = p
        children[p] += 1
        children[i] = 0
    return parent


def tree_layout(parent: list[int]):
    """Coordinates: leaves evenly spaced in x, depth stacked in y."""
    n = len(parent)
    kids: dict[int, list[int]] = {i: [] for i in range(-1, n)}
    for i, p in enumerate(parent):
        if i > 0:
            kids[p].append(i)
    depth = [0] * n
    for i in range(1, n):
        depth[i] = depth[parent[i]] + 1

    next_leaf = [0]
    xs = [0.0] * n

    def place(i: int) -> float:
        if not kids[i]:
            xs[i] = next_leaf[0] * 80.0
            next_leaf[0] += 1
            return xs[i]
        spans = [place(c) for c in kids[i]]
        xs[i] = (spans[0] + spans[-1]) / 2.0
        return xs[i]

    place(0)
    coords = {i: (xs[i], -(depth[i] + 1) * 80.0) for i in range(n)}
    coords[-1] = (xs[0], 0.0)  # reservoir above the trunk
    return coords, depth, kids


def subtree_sizes(parent: list[int]) -> list[int]:
    n = len(parent)
    size = [1] * n
    for i in range(n - 1, 0, -1):
        size[parent[i]] += size[i]
    return size


def make_network(
    seed: int,
    n_junctions: int,
    bulk_per_day: float,
    title: str,
    cross_links: int = 0,
):
    rng = np.random.default_rng(seed)
    parent = build_tree(rng, n_junctions)
    coords, depth, kids = tree_layout(parent)
    size = subtree_sizes(parent)

    def jid(i: int) -> str:
        return f"J{i + 1}"

    demands = rng.uniform(0.05, 0.6, size=n_junctions)
    elevations = rng.uniform(40.0, 60.0, size=n_junctions)

    lines = ["[TITLE]", title, "", "[JUNCTIONS]", ";id\televation\tdemand_lps"]
    for i in range(n_junctions):
        lines.append(f"{jid(i)}\t{elevations[i]:.2f}\t{demands[i]:.3f}")
    lines += ["", "[RESERVOIRS]", ";id\thead_m", "R1\t120.00", "", "[PIPES]",
              ";id\tfrom\tto\tlength_m\tdiameter_mm\troughness"]

    def diameter(i: int) -> int:
        d = 100 + 14 * int(np.sqrt(size[i]) * 3)
        return min(d, 350)

    pipe_no = 0
    for i in range(n_junctions):
        pipe_no += 1
        frm = "R1" if parent[i] == -1 else jid(parent[i])
        length = float(rng.uniform(60.0, 240.0))
        lines.append(
            f"P{pipe_no}\t{frm}\t{jid(i)}\t{length:.1f}\t{diameter(i)}\t"
            f"{int(rng.integers(100, 141))}"
        )

    by_depth: dict[int, list[int]] = {}
    for i in range(n_junctions):
        by_depth.setdefault(depth[i], []).append(i)
    added = 0
    attempts = 0
    while added < cross_links and attempts < cross_links * 50:
        attempts += 1
        level = by_depth[int(rng.choice(sorted(d for d in by_depth if len(by_depth[d]) > 3)))]
        a, b = rng.choice(len(level), size=2, replace=False)
        a, b = level[int(a)], level[int(b)]
        if parent[a] == parent[b]:
            continue
        (xa, ya), (xb, yb) = coords[a], coords[b]
        length = 1.2 * float(np.hypot(xa - xb, ya - yb))
        if length < 1.0 or length > 2000.0:
            continue
        pipe_no += 1
        lines.append(f"P{pipe_no}\t{jid(a)}\t{jid(b)}\t{length:.1f}\t150\t120")
        added += 1

    lines += ["", "[QUALITY]", ";node\tinitial_mg_l", "R1\t1.00"]
    lines += ["", "[REACTIONS]", f"GLOBAL BULK -{bulk_per_day}"]
    lines += ["", "[TIMES]", "QUALITY TIMESTEP 0:05"]
    lines += ["", "[OPTIONS]", "UNITS LPS", "QUALITY CHLORINE mg/L"]
    lines += ["", "[COORDINATES]", ";node\tx\ty", f"R1\t{coords[-1][0]:.1f}\t{coords[-1][1]:.1f}"]
    for i in range(n_junctions):
        lines.append(f"{jid(i)}\t{coords[i][0]:.1f}\t{coords[i][1]:.1f}")
    lines += ["", "[END]", ""]
    return "\n".join(lines)


def make_demo_env(net, seed: int, contracts: dict[str, int]) -> str:
    """Complete hourly week: high-precursor water so the demo shows events."""
    rng = np.random.default_rng(seed)
    nodes = sorted(net.nodes)
    start = datetime(2024, 3, 1, 0, 0)
    rows = [",".join(CORE_HEADER)]
    for h in range(168):
        ts = (start + timedelta(hours=h)).isoformat(sep=" ")
        for node in nodes:
            rows.append(
                ",".join(
                    [
                        ts,
                        node,
                        str(contracts.get(node, 0)),
                        f"{rng.uniform(0.3, 1.2):.3f}",
                        f"{rng.uniform(12.0, 20.0):.2f}",
                        f"{rng.uniform(6.8, 8.2):.2f}",
                        f"{rng.uniform(5.0, 12.0):.2f}",
                        f"{rng.uniform(2.0, 13.0):.2f}",
                        f"{rng.uniform(2.8, 4.9):.2f}",
                    ]
                )
            )
    return "\n".join(rows) + "\n"


def make_contracts(net, seed: int) -> tuple[str, dict[str, int]]:
    rng = np.random.default_rng(seed)
    table: dict[str, int] = {}
    rows = ["Node,Contracts"]
    for node in sorted(net.nodes):
        if net.nodes[node].kind != "junction":
            continue
        table[node] = int(rng.integers(5, 500))
        rows.append(f"{node},{table[node]}")
    return "\n".join(rows) + "\n", table


ENV_TEMPLATE_ROWS = [
    "01-03-24 08:00,J1,120,0.72,13.05,7.4,5.77,12.86,4.36",
    "01-03-24 08:00,J2,85,0.55,13.10,7.3,4.90,10.20,4.10",
    "01-03-24 09:00,J1,120,0.70,13.20,7.4,5.81,12.90,4.35",
    "01-03-24 09:00,J2,85,0.54,13.25,7.3,4.88,10.18,4.12",
]

CONTRACTS_TEMPLATE = "Node,Contracts\nJ1,120\nJ2,85\nJ3,210\n"


def check(name: str, text: str):
    net = parse_inp(text)
    flows = solve_flows(net)
    print(
        f"{name}: {len(net.nodes)} nodes, {len(net.pipes)} pipes, "
        f"residual {flows.residual:.2e} L/s in {flows.iterations} iterations"
    )
    return net


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "templates").mkdir(exist_ok=True)

    demo = make_network(101, 10, 1.0, "demo tree network")
    branched = make_network(227, 226, 1.2, "branched dead-end network, case-study scale")
    grid = make_network(1000, 999, 1.0, "scalability network with loops", cross_links=25)

    demo_net = check("demo", demo)
    check("branched227", branched)
    check("grid1000", grid)

    (DATA / "demo.inp").write_text(demo)
    (DATA / "branched227.inp").write_text(branched)
    (DATA / "grid1000.inp").write_text(grid)

    contracts_csv, table = make_contracts(demo_net, 11)
    (DATA / "demo_contracts.csv").write_text(contracts_csv)
    (DATA / "demo_env.csv").write_text(make_demo_env(demo_net, 12, table))

    branched_net = parse_inp(branched)
    grid_net = parse_inp(grid)
    (DATA / "branched227_contracts.csv").write_text(make_contracts(branched_net, 13)[0])
    (DATA / "grid1000_contracts.csv").write_text(make_contracts(grid_net, 14)[0])

    header = ",".join(CORE_HEADER)
    (DATA / "templates" / "env_template.csv").write_text(
        header + "\n" + "\n".join(ENV_TEMPLATE_ROWS) + "\n"
    )
    (DATA / "templates" / "contracts_template.csv").write_text(CONTRACTS_TEMPLATE)
    print(f"wrote bundled data under {DATA}")


if __name__ == "__main__":
    main()
