"""Tests for attack circuit construction and export."""

import json
import re

import networkx as nx
import pytest

from src.core.config import ScoringConfig
from src.core.exceptions import DegenerateCircuitError, MissingArtifactError
from src.core.models import EdgeKind, IoPair, VertexKind
from src.services.circuit import (
    QUINTILE_COLORS,
    build,
    edge_weight,
    export_graph,
    load_adjacency,
    phrase_match,
    quintile_colors,
    to_adjacency,
    to_dot,
)
from src.services.cvss import base_scores
from tests.conftest import ECHO_CVE, ROKU_VECTOR, cve_record, scores_of

NODE_LINE = re.compile(r"^\s*v\d+ \[", re.MULTILINE)
EDGE_LINE = re.compile(r"^\s*v\d+ -> v\d+", re.MULTILINE)


def two_cve_inputs(first_pair: tuple[str, str], second_pair: tuple[str, str]):
    """Two CVEs on one device with the given (input, output) phrases."""
    first, second = "CVE-2020-0001", "CVE-2020-0002"
    records = {
        "hub": [cve_record(first, "hub", ROKU_VECTOR), cve_record(second, "hub", ROKU_VECTOR)]
    }
    pairs = {
        first: [IoPair(cve_id=first, input=first_pair[0], output=first_pair[1])],
        second: [IoPair(cve_id=second, input=second_pair[0], output=second_pair[1])],
    }
    scores = {first: scores_of(3.0, 2.0), second: scores_of(2.0, 5.0)}
    return records, pairs, scores


def graph_of(circuit) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_edges_from((e.source, e.target) for e in circuit.edges)
    return graph


class TestPhraseMatch:
    """Tests for stemmed Jaccard matching."""

    def test_identical(self):
        assert phrase_match("root access", "root access") == 1.0

    def test_inflections_match(self):
        assert phrase_match("unauthorized access", "unauthorized accesses") == 1.0

    def test_partial_overlap(self):
        assert phrase_match("root shell", "root access") == pytest.approx(1 / 3)

    def test_disjoint(self):
        assert phrase_match("data leak", "network access") == 0.0


class TestBuild:
    """Tests for circuit construction."""

    def test_single_cve(self, single_cve_inputs):
        """One CVE with one pair gives attacker, input, CVE, output and target."""
        circuit = build(*single_cve_inputs)

        assert [v.kind for v in circuit.vertices] == [
            VertexKind.ATTACKER,
            VertexKind.CVE,
            VertexKind.INPUT,
            VertexKind.OUTPUT,
            VertexKind.TARGET,
        ]
        assert len(circuit.edges) == 4
        assert circuit.sources == ["Attacker"]
        assert circuit.sinks == ["Target:echo"]
        assert circuit.devices == {"echo": [f"{ECHO_CVE}@echo"]}

    def test_edge_weights(self, single_cve_inputs):
        """Entry edges carry no impact and sink edges no exploitability."""
        _, _, scores = single_cve_inputs
        circuit = build(*single_cve_inputs)
        by_kind = {e.kind: e for e in circuit.edges}

        base = scores[ECHO_CVE]
        assert by_kind[EdgeKind.ENTRY].exploitability_weight == base.eb
        assert by_kind[EdgeKind.ENTRY].impact_weight == 0.0
        assert by_kind[EdgeKind.SINK].exploitability_weight == 0.0
        assert by_kind[EdgeKind.SINK].impact_weight == base.ib

    def test_one_output_vertex_per_phrase(self, echo_record, echo_pairs):
        records = {"echo": [echo_record]}

        circuit = build(records, echo_pairs, {ECHO_CVE: base_scores(echo_record.cvss)})

        cve = f"{ECHO_CVE}@echo"
        assert sum(1 for e in circuit.edges if e.source == cve) == 3
        assert sum(1 for e in circuit.edges if e.kind == EdgeKind.SINK) == 3

    def test_cross_cve_link(self, chain_inputs):
        """An output matching another CVE's input becomes a link edge."""
        circuit = build(*chain_inputs)

        links = [e for e in circuit.edges if e.kind == EdgeKind.LINK]
        assert len(links) == 1
        link = links[0]
        assert link.source == "CVE-2020-0001@wemo/out:root shell"
        assert link.target == "CVE-2020-0002@echo/in:root shell"
        # Downstream exploitability, upstream impact
        assert link.exploitability_weight == 2.0
        assert link.impact_weight == 2.0

    def test_linked_vertices_are_not_entries_or_sinks(self, chain_inputs):
        circuit = build(*chain_inputs)

        entry_targets = {e.target for e in circuit.edges if e.kind == EdgeKind.ENTRY}
        sink_sources = {e.source for e in circuit.edges if e.kind == EdgeKind.SINK}
        assert entry_targets == {"CVE-2020-0001@wemo/in:network access"}
        assert sink_sources == {"CVE-2020-0002@echo/out:data leak"}
        assert circuit.sinks == ["Target:echo"]

    def test_cycle_closing_edge_dropped(self):
        """Of two mutually matching CVEs, the later candidate edge is dropped."""
        circuit = build(
            *two_cve_inputs(("admin shell", "root privileges"), ("root privileges", "admin shell"))
        )

        assert circuit.dropped_edges == [
            ("CVE-2020-0002@hub/out:admin shell", "CVE-2020-0001@hub/in:admin shell")
        ]
        assert nx.is_directed_acyclic_graph(graph_of(circuit))

    def test_no_self_loops(self):
        """A CVE whose output matches its own input is not linked to itself."""
        records, pairs, scores = two_cve_inputs(("shell", "shell"), ("data", "leak"))

        circuit = build(records, pairs, scores)

        assert not [e for e in circuit.edges if e.kind == EdgeKind.LINK]

    def test_no_pairs_anywhere_is_degenerate(self, single_cve_inputs):
        records, _, scores = single_cve_inputs

        with pytest.raises(DegenerateCircuitError, match="no entry points"):
            build(records, {}, scores)

    def test_cve_without_pairs_is_unreachable(self, chain_inputs):
        records, pairs, scores = chain_inputs
        orphan = cve_record("CVE-2020-0003", "echo", ROKU_VECTOR)
        records = {**records, "echo": [*records["echo"], orphan]}
        scores = {**scores, "CVE-2020-0003": scores_of(1.0, 1.0)}

        circuit = build(records, pairs, scores)

        assert circuit.unreachable == ["CVE-2020-0003@echo"]

    def test_adding_a_device_keeps_existing_structure(self, chain_inputs, single_cve_inputs):
        """Without cross matches, the union circuit contains the smaller one."""
        records, pairs, scores = chain_inputs
        _, extra_pairs, extra_scores = single_cve_inputs

        small = build(records, pairs, scores)
        union = build(
            {**records, "dot": [cve_record(ECHO_CVE, "dot", ROKU_VECTOR)]},
            {**pairs, **extra_pairs},
            {**scores, **extra_scores},
        )

        union_edges = {(e.source, e.target) for e in union.edges}
        assert {(e.source, e.target) for e in small.edges} <= union_edges
        assert {v.id for v in small.vertices} <= {v.id for v in union.vertices}

    def test_per_device_attackers(self, chain_inputs, single_cve_inputs):
        records, pairs, scores = chain_inputs
        _, extra_pairs, extra_scores = single_cve_inputs
        config = ScoringConfig(attacker_placement="per_device")

        circuit = build(
            {**records, "dot": [cve_record(ECHO_CVE, "dot", ROKU_VECTOR)]},
            {**pairs, **extra_pairs},
            {**scores, **extra_scores},
            config,
        )

        assert circuit.sources == ["Attacker@dot", "Attacker@wemo"]

    def test_sorted_and_deterministic(self, chain_inputs):
        first = build(*chain_inputs)
        second = build(*chain_inputs)

        assert first == second
        assert [v.id for v in first.vertices] == sorted(v.id for v in first.vertices)


class TestExport:
    """Tests for DOT and adjacency export."""

    def test_dot_counts(self, single_cve_inputs):
        dot = to_dot(build(*single_cve_inputs), "exploitability")

        assert "digraph attack_circuit {" in dot
        assert len(NODE_LINE.findall(dot)) == 5
        assert len(EDGE_LINE.findall(dot)) == 4

    def test_dot_labels_follow_metric(self, single_cve_inputs):
        circuit = build(*single_cve_inputs)

        exploit = to_dot(circuit, "exploitability")
        impact = to_dot(circuit, "impact")

        assert exploit != impact
        assert len(NODE_LINE.findall(impact)) == 5

    def test_dot_deterministic(self, chain_inputs):
        circuit = build(*chain_inputs)

        assert to_dot(circuit, "risk") == to_dot(circuit, "risk")

    def test_risk_weight(self, chain_inputs):
        link = next(e for e in build(*chain_inputs).edges if e.kind == EdgeKind.LINK)

        assert edge_weight(link, "risk") == pytest.approx(2.0 * 2.0 / 10)

    def test_quintile_colors(self):
        scores = {f"v{i}": float(i) for i in range(10)}

        colors = quintile_colors(scores)

        assert set(colors.values()) <= set(QUINTILE_COLORS)
        assert colors["v0"] == "green"
        assert colors["v9"] == "purple"

    def test_adjacency_read_back(self, chain_inputs):
        circuit = build(*chain_inputs)

        adjacency = to_adjacency(circuit)

        assert "from" in adjacency["edges"][0]
        assert load_adjacency(json.dumps(adjacency)) == circuit

    def test_export_graph_pair(self, chain_inputs):
        circuit = build(*chain_inputs)

        dot, adjacency = export_graph(circuit, "impact")

        assert dot == to_dot(circuit, "impact")
        assert adjacency == to_adjacency(circuit)

    def test_invalid_adjacency(self):
        with pytest.raises(MissingArtifactError):
            load_adjacency("{not json")
