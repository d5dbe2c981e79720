import math

import pytest

from dbpsense.errors import (
    DanglingReferenceError,
    DuplicateIdError,
    MalformedRowError,
    MissingSectionError,
    UnsupportedUnitsError,
)
from dbpsense.network import (
    Network,
    count_rows,
    parse_inp,
    reachable_from_sources,
    serialize_inp,
    validate_network,
)

MINIMAL = """
[JUNCTIONS]
J1  10.0  1.5
[RESERVOIRS]
R1  50.0
[PIPES]
P1  R1  J1  100.0  150.0  130.0
"""


def test_minimal_network_parses():
    net = parse_inp(MINIMAL)
    assert set(net.nodes) == {"J1", "R1"}
    assert net.nodes["J1"].kind == "junction"
    assert net.nodes["J1"].base_demand == 1.5
    assert net.nodes["R1"].kind == "reservoir"
    assert net.nodes["R1"].head == 50.0
    assert net.pipes["P1"].length == 100.0
    assert net.pipes["P1"].status == "open"


def test_comments_and_blank_lines_ignored():
    noisy = MINIMAL.replace("[PIPES]", "; a comment\n\n[PIPES]  ; trailing\n")
    noisy = noisy.replace("J1  10.0  1.5", "J1  10.0  1.5 ; the only junction")
    net = parse_inp(noisy)
    assert set(net.nodes) == {"J1", "R1"}
    assert net.nodes["J1"].base_demand == 1.5


def test_section_order_insensitive():
    reordered = """
[PIPES]
P1  R1  J1  100.0  150.0  130.0
[RESERVOIRS]
R1  50.0
[JUNCTIONS]
J1  10.0  1.5
"""
    a = parse_inp(MINIMAL)
    b = parse_inp(reordered)
    assert a.nodes == b.nodes
    assert a.pipes == b.pipes


def test_dangling_pipe_reference_names_node_and_line():
    bad = MINIMAL + "P2  J1  Z9  10.0  100.0  120.0\n"
    with pytest.raises(DanglingReferenceError) as ei:
        parse_inp(bad)
    assert "Z9" in str(ei.value)
    assert ei.value.line is not None
    assert "line" in str(ei.value)


def test_duplicate_node_id_rejected():
    bad = MINIMAL.replace("J1  10.0  1.5", "J1  10.0  1.5\nJ1  11.0  0.5")
    with pytest.raises(DuplicateIdError):
        parse_inp(bad)


def test_missing_junctions_section():
    with pytest.raises(MissingSectionError):
        parse_inp("[RESERVOIRS]\nR1 50.0\n")


def test_missing_source():
    with pytest.raises(MissingSectionError):
        parse_inp("[JUNCTIONS]\nJ1 10.0 1.0\n")


def test_non_numeric_field_rejected_with_line():
    bad = MINIMAL.replace("100.0  150.0", "abc  150.0")
    with pytest.raises(MalformedRowError) as ei:
        parse_inp(bad)
    assert "abc" in str(ei.value)


def test_negative_demand_rejected():
    bad = MINIMAL.replace("J1  10.0  1.5", "J1  10.0  -1.5")
    with pytest.raises(MalformedRowError):
        parse_inp(bad)


def test_non_lps_units_rejected():
    bad = MINIMAL + "[OPTIONS]\nUNITS GPM\n"
    with pytest.raises(UnsupportedUnitsError):
        parse_inp(bad)


def test_demands_section_replaces_base_demand():
    text = MINIMAL + "[DEMANDS]\nJ1  4.0\nJ1  0.5\n"
    net = parse_inp(text)
    # multiple rows for one junction sum; together they replace the base value
    assert net.nodes["J1"].base_demand == 4.5


def test_reactions_bulk_converted_to_per_hour():
    text = MINIMAL + "[REACTIONS]\nGLOBAL BULK -2.4\nORDER BULK 1\n"
    net = parse_inp(text)
    assert math.isclose(net.bulk_coeff, 0.1)
    assert net.reaction_order == 1.0


def test_quality_timestep_clock_format():
    text = MINIMAL + "[TIMES]\nQUALITY TIMESTEP 0:05\n"
    assert parse_inp(text).quality_timestep == 300.0


def test_pumps_recorded_as_unsupported():
    text = MINIMAL + "[PUMPS]\nPU1  R1  J1  HEAD  C1\n"
    net = parse_inp(text)
    assert ("pumps", "PU1") in net.unsupported_elements


def test_coordinates_and_quality_attach():
    text = MINIMAL + "[COORDINATES]\nJ1  3.0  4.0\n[QUALITY]\nJ1 0.8\n"
    net = parse_inp(text)
    assert net.nodes["J1"].coord == (3.0, 4.0)
    assert net.nodes["J1"].initial_quality == 0.8


def test_roundtrip_preserves_all_fields():
    text = MINIMAL + (
        "[DEMANDS]\nJ1  4.0\n"
        "[COORDINATES]\nJ1  3.0  4.0\nR1  0.0  0.0\n"
        "[QUALITY]\nJ1 0.8\n"
        "[REACTIONS]\nGLOBAL BULK -2.4\nORDER BULK 1\n"
        "[TIMES]\nQUALITY TIMESTEP 0:05\n"
        "[OPTIONS]\nUNITS LPS\n"
    )
    net = parse_inp(text)
    back = parse_inp(serialize_inp(net))
    assert back.nodes == net.nodes
    assert back.pipes == net.pipes
    assert back.bulk_coeff == net.bulk_coeff
    assert back.reaction_order == net.reaction_order
    assert back.quality_timestep == net.quality_timestep


def test_roundtrip_preserves_tank_head():
    text = """
[JUNCTIONS]
J1  10.0  1.0
[TANKS]
T1  95.0  5.0
[PIPES]
P1  T1  J1  100.0  150.0  130.0
"""
    net = parse_inp(text)
    assert net.nodes["T1"].head == 100.0
    back = parse_inp(serialize_inp(net))
    assert back.nodes["T1"] == net.nodes["T1"]


def test_parsed_counts_match_raw_row_counts():
    # independent line-count oracle over the raw text
    text = MINIMAL + "[DEMANDS]\nJ1 2.0\n; comment row\n"
    net = parse_inp(text)
    assert len(net.pipes) == count_rows(text, ["PIPES"])
    n_nodes = count_rows(text, ["JUNCTIONS", "RESERVOIRS", "TANKS"])
    assert len(net.nodes) == n_nodes


TWO_COMPONENT = """
[JUNCTIONS]
J1  10.0  1.0
J2  10.0  1.0
X1  5.0   1.0
X2  5.0   1.0
[RESERVOIRS]
R1  50.0
[PIPES]
P1  R1  J1  100.0  150.0  130.0
P2  J1  J2  100.0  150.0  130.0
P3  X1  X2  100.0  150.0  130.0
"""


def test_disconnected_component_flagged():
    net = parse_inp(TWO_COMPONENT)
    diags = validate_network(net)
    flagged = {d.node for d in diags if d.code == "disconnected"}
    # oracle: breadth-first reachability from the reservoir
    assert flagged == set(net.nodes) - reachable_from_sources(net, include_closed=True) == {"X1", "X2"}


def test_closed_pipe_isolation_flagged():
    text = """
[JUNCTIONS]
J1  10.0  1.0
J2  10.0  1.0
[RESERVOIRS]
R1  50.0
[PIPES]
P1  R1  J1  100.0  150.0  130.0
P2  J1  J2  100.0  150.0  130.0  0.0  Closed
"""
    net = parse_inp(text)
    assert net.pipes["P2"].status == "closed"
    diags = validate_network(net)
    assert any(d.code == "isolated" and d.node == "J2" for d in diags)
    assert not any(d.code == "disconnected" for d in diags)


def test_zero_demand_network_flagged():
    text = MINIMAL.replace("J1  10.0  1.5", "J1  10.0  0.0")
    diags = validate_network(parse_inp(text))
    assert any(d.code == "zero-demand" for d in diags)


def test_valid_network_has_no_diagnostics():
    assert validate_network(parse_inp(MINIMAL)) == []


def test_self_loop_pipe_rejected():
    bad = MINIMAL + "P9  J1  J1  10.0  100.0  120.0\n"
    with pytest.raises(MalformedRowError):
        parse_inp(bad)


def test_extra_sections_survive_roundtrip():
    text = MINIMAL + "[PATTERNS]\nPAT1 1.0 1.2 0.8\n"
    net = parse_inp(text)
    assert net.extra_sections["PATTERNS"] == ["PAT1 1.0 1.2 0.8"]
    back = parse_inp(serialize_inp(net))
    assert back.extra_sections["PATTERNS"] == net.extra_sections["PATTERNS"]
