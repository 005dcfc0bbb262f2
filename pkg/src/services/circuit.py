"""Attack circuit construction from per-CVE input/output pairs, plus DOT and JSON export."""

import json
from collections.abc import Mapping
from functools import lru_cache

import graphviz
import networkx as nx
import numpy as np
import structlog
from pydantic import ValidationError

from src.core.config import Metric, ScoringConfig
from src.core.exceptions import CatalogError, DegenerateCircuitError, MissingArtifactError
from src.core.models import (
    AttackCircuit,
    BaseScores,
    CveRecord,
    Edge,
    EdgeKind,
    IoPair,
    Vertex,
    VertexKind,
)
from src.services.flow_solver import EB_SCALE_MAX
from src.services.text_pipeline import stem_tokens

logger = structlog.get_logger(__name__)

QUINTILE_COLORS = ("green", "yellow", "orange", "red", "purple")

ATTACKER = "Attacker"


def attacker_id(device_id: str | None = None) -> str:
    return ATTACKER if device_id is None else f"{ATTACKER}@{device_id}"


def cve_vertex_id(cve_id: str, device_id: str) -> str:
    return f"{cve_id}@{device_id}"


def input_vertex_id(cve_id: str, device_id: str, phrase: str) -> str:
    return f"{cve_vertex_id(cve_id, device_id)}/in:{phrase}"


def output_vertex_id(cve_id: str, device_id: str, phrase: str) -> str:
    return f"{cve_vertex_id(cve_id, device_id)}/out:{phrase}"


def target_vertex_id(device_id: str) -> str:
    return f"Target:{device_id}"


@lru_cache(maxsize=4096)
def _stem_set(phrase: str) -> frozenset[str]:
    return frozenset(stem_tokens(phrase))


def phrase_match(output_phrase: str, input_phrase: str) -> float:
    """Jaccard similarity of the stemmed token sets of two phrases."""
    left = _stem_set(output_phrase)
    right = _stem_set(input_phrase)
    union = left | right
    if not union:
        return 0.0
    return len(left & right) / len(union)


class _CircuitBuilder:
    """Accumulates vertices and edges in build order."""

    def __init__(self) -> None:
        self.vertices: dict[str, Vertex] = {}
        self.edges: dict[tuple[str, str], Edge] = {}
        self.graph = nx.DiGraph()

    def vertex(self, vertex: Vertex) -> str:
        self.vertices.setdefault(vertex.id, vertex)
        self.graph.add_node(vertex.id)
        return vertex.id

    def edge(self, source: str, target: str, eb: float, ib: float, kind: EdgeKind) -> None:
        self.edges[(source, target)] = Edge(
            source=source,
            target=target,
            exploitability_weight=eb,
            impact_weight=ib,
            kind=kind,
        )
        self.graph.add_edge(source, target)

    def closes_cycle(self, source: str, target: str) -> bool:
        return nx.has_path(self.graph, target, source)


def build(
    records: Mapping[str, list[CveRecord]],
    io_pairs: Mapping[str, list[IoPair]],
    scores: Mapping[str, BaseScores],
    config: ScoringConfig | None = None,
) -> AttackCircuit:
    """
    Compose the attack circuit of every device's CVEs.

    Args:
        records: device_id -> CVE records of that device
        io_pairs: cve_id -> extracted input/output pairs
        scores: cve_id -> base scores
        config: match threshold and attacker placement

    Returns:
        AttackCircuit with sorted vertices and edges plus its build report

    Raises:
        DegenerateCircuitError: no entry point or no sink
    """
    config = config or ScoringConfig()
    builder = _CircuitBuilder()
    devices: dict[str, list[str]] = {}
    inputs: list[Vertex] = []
    outputs: list[Vertex] = []

    # Per-CVE exploit chains: Input -> Cve -> Output
    for device_id in sorted(records):
        devices[device_id] = []
        for record in records[device_id]:
            if record.cve_id not in scores:
                raise CatalogError(f"No base scores for {record.cve_id}")
            base = scores[record.cve_id]
            cve_id = builder.vertex(
                Vertex(
                    id=cve_vertex_id(record.cve_id, device_id),
                    kind=VertexKind.CVE,
                    cve_id=record.cve_id,
                    device_id=device_id,
                )
            )
            devices[device_id].append(cve_id)

            pairs = io_pairs.get(record.cve_id, [])
            for phrase in dict.fromkeys(p.input for p in pairs):
                vertex = Vertex(
                    id=input_vertex_id(record.cve_id, device_id, phrase),
                    kind=VertexKind.INPUT,
                    cve_id=record.cve_id,
                    device_id=device_id,
                    phrase=phrase,
                )
                inputs.append(vertex)
                builder.vertex(vertex)
                builder.edge(vertex.id, cve_id, base.eb, base.ib, EdgeKind.EXPLOIT)
            for phrase in dict.fromkeys(p.output for p in pairs):
                vertex = Vertex(
                    id=output_vertex_id(record.cve_id, device_id, phrase),
                    kind=VertexKind.OUTPUT,
                    cve_id=record.cve_id,
                    device_id=device_id,
                    phrase=phrase,
                )
                outputs.append(vertex)
                builder.vertex(vertex)
                builder.edge(cve_id, vertex.id, base.eb, base.ib, EdgeKind.EXPLOIT)
        devices[device_id].sort()

    # Cross-CVE links in lexicographic (from, to) order
    candidates = sorted(
        (out_v.id, in_v.id, in_v.cve_id, out_v.cve_id)
        for out_v in outputs
        for in_v in inputs
        if out_v.cve_id != in_v.cve_id
        and phrase_match(out_v.phrase, in_v.phrase) >= config.match_threshold
    )
    dropped: list[tuple[str, str]] = []
    for source, target, downstream, upstream in candidates:
        if builder.closes_cycle(source, target):
            dropped.append((source, target))
            logger.info("Dropped cycle-closing edge", source=source, target=target)
            continue
        builder.edge(
            source,
            target,
            scores[downstream].eb,
            scores[upstream].ib,
            EdgeKind.LINK,
        )

    linked_inputs = {t for (s, t), e in builder.edges.items() if e.kind == EdgeKind.LINK}
    linked_outputs = {s for (s, t), e in builder.edges.items() if e.kind == EdgeKind.LINK}

    # Entry edges from the attacker(s)
    sources: set[str] = set()
    for vertex in inputs:
        if vertex.id in linked_inputs:
            continue
        owner = vertex.device_id if config.attacker_placement == "per_device" else None
        origin = attacker_id(owner)
        builder.vertex(Vertex(id=origin, kind=VertexKind.ATTACKER, device_id=owner))
        sources.add(origin)
        builder.edge(origin, vertex.id, scores[vertex.cve_id].eb, 0.0, EdgeKind.ENTRY)

    # Sink edges to the owning device's target
    sinks: set[str] = set()
    for vertex in outputs:
        if vertex.id in linked_outputs:
            continue
        target = target_vertex_id(vertex.device_id)
        builder.vertex(Vertex(id=target, kind=VertexKind.TARGET, device_id=vertex.device_id))
        sinks.add(target)
        builder.edge(vertex.id, target, 0.0, scores[vertex.cve_id].ib, EdgeKind.SINK)

    if not sources:
        raise DegenerateCircuitError("Circuit has no entry points (attacker out-degree 0)")
    if not sinks:
        raise DegenerateCircuitError("Circuit has no sinks")

    reachable = set().union(*(nx.descendants(builder.graph, s) for s in sources))
    productive = set().union(*(nx.ancestors(builder.graph, t) for t in sinks))
    unreachable = sorted(
        vertex_id
        for ids in devices.values()
        for vertex_id in ids
        if vertex_id not in reachable or vertex_id not in productive
    )
    if unreachable:
        logger.warning("CVE vertices off every attack path", unreachable=unreachable)

    circuit = AttackCircuit(
        vertices=[builder.vertices[v] for v in sorted(builder.vertices)],
        edges=[builder.edges[k] for k in sorted(builder.edges)],
        sources=sorted(sources),
        sinks=sorted(sinks),
        devices=devices,
        dropped_edges=dropped,
        unreachable=unreachable,
    )
    logger.info(
        "Circuit built",
        vertex_count=len(circuit.vertices),
        edge_count=len(circuit.edges),
        dropped_count=len(dropped),
    )
    return circuit


# =============================================================================
# Export
# =============================================================================


def edge_weight(edge: Edge, metric: Metric) -> float:
    """
    Weight shown for an edge under a metric.

    Risk weighs impact by normalized exploitability.
    """
    if metric == "exploitability":
        return edge.exploitability_weight
    if metric == "impact":
        return edge.impact_weight
    return edge.impact_weight * edge.exploitability_weight / EB_SCALE_MAX


def vertex_scores(circuit: AttackCircuit, metric: Metric) -> dict[str, float]:
    """Largest selected weight over the edges incident to each vertex."""
    scores = {v.id: 0.0 for v in circuit.vertices}
    for edge in circuit.edges:
        weight = edge_weight(edge, metric)
        scores[edge.source] = max(scores[edge.source], weight)
        scores[edge.target] = max(scores[edge.target], weight)
    return scores


def quintile_colors(scores: Mapping[str, float]) -> dict[str, str]:
    """Colour each vertex by the quintile of its score."""
    if not scores:
        return {}
    values = np.array(list(scores.values()), dtype=float)
    bounds = np.quantile(values, [0.2, 0.4, 0.6, 0.8])
    buckets = np.searchsorted(bounds, values, side="left")
    return {
        vertex_id: QUINTILE_COLORS[int(bucket)]
        for vertex_id, bucket in zip(scores, buckets, strict=True)
    }


def to_dot(circuit: AttackCircuit, metric: Metric) -> str:
    colors = quintile_colors(vertex_scores(circuit, metric))
    names = {v.id: f"v{i}" for i, v in enumerate(circuit.vertices)}

    dot = graphviz.Digraph(name="attack_circuit", comment=f"{metric} circuit")
    dot.attr(rankdir="LR")
    for vertex in circuit.vertices:
        shape = {
            VertexKind.ATTACKER: "doublecircle",
            VertexKind.TARGET: "doubleoctagon",
            VertexKind.CVE: "box",
        }.get(vertex.kind, "ellipse")
        dot.node(
            names[vertex.id],
            label=vertex.id,
            shape=shape,
            style="filled",
            fillcolor=colors[vertex.id],
        )
    for edge in circuit.edges:
        dot.edge(
            names[edge.source],
            names[edge.target],
            label=f"{edge_weight(edge, metric):.4f}",
        )
    return dot.source


def to_adjacency(circuit: AttackCircuit) -> dict:
    return circuit.model_dump(mode="json", by_alias=True)


def export_graph(circuit: AttackCircuit, metric: Metric) -> tuple[str, dict]:
    """DOT text coloured and labelled by the metric, and the JSON adjacency."""
    return to_dot(circuit, metric), to_adjacency(circuit)


def load_adjacency(raw_json: bytes | str) -> AttackCircuit:
    """Rebuild a circuit from its JSON adjacency."""
    try:
        return AttackCircuit.model_validate(json.loads(raw_json))
    except (json.JSONDecodeError, ValidationError) as e:
        raise MissingArtifactError(f"Invalid circuit adjacency: {e}") from e
