"""Compositional, final, risk and network scores over solved attack circuits."""

import math
from collections.abc import Mapping
from dataclasses import dataclass

import structlog

from src.core.config import Metric, ScoringConfig
from src.core.models import (
    Arc,
    AttackCircuit,
    AttackPath,
    BaseScores,
    CveScore,
    DeviceScore,
    EdgeKind,
    FlowAssignment,
    FlowNetwork,
    NetworkScore,
    ScoreReport,
    TrafficProfile,
    VertexKind,
)
from src.services import flow_solver
from src.services.circuit import cve_vertex_id
from src.services.flow_solver import from_fixed, resistance, to_fixed

logger = structlog.get_logger(__name__)

METRICS: tuple[Metric, ...] = ("impact", "exploitability", "risk")

# tanh reaches 1.0 in floating point for large arguments
_BELOW_ONE = math.nextafter(1.0, 0.0)

NORMALIZER_NOTE = (
    "Scores divide by the normalizers v_n; multiplying saturates every score near 1."
)
MULTIPLIER_NOTE = (
    "EN and IP multiplier tables are back-solved from published device scores, not measured."
)
STATIC_DEFAULTS_NOTE = "static profile defaults: rarely_online, unencrypted, clean"


def sigma(value: float) -> float:
    """tanh squashed strictly below 1."""
    return min(math.tanh(value), _BELOW_ONE)


# =============================================================================
# Circuit -> flow network
# =============================================================================


@dataclass
class SolvedCircuit:
    """One optimization problem solved over a circuit."""

    metric: Metric
    network: FlowNetwork
    assignment: FlowAssignment
    vertex_ids: list[str]

    def edge_flow(self, edge_index: int) -> float:
        # Circuit edges come first in the arc list, in circuit order
        return from_fixed(self.assignment.flows[edge_index])

    @property
    def value(self) -> float:
        return from_fixed(self.assignment.total_value)


def _capacity(kind: EdgeKind, weight: float, unbounded_kind: EdgeKind, infinite: int) -> int:
    return infinite if kind == unbounded_kind else to_fixed(weight)


def to_flow_network(circuit: AttackCircuit, metric: Metric) -> tuple[FlowNetwork, list[str]]:
    """
    Flow network of a circuit with a super source and super sink appended.

    Impact and risk use impact capacities with unbounded entry edges; exploitability
    uses exploitability capacities with unbounded sink edges. Costs are resistances,
    zero on sink and super arcs.
    """
    vertex_ids = [v.id for v in circuit.vertices]
    index = {vertex_id: i for i, vertex_id in enumerate(vertex_ids)}
    super_source, super_sink = len(vertex_ids), len(vertex_ids) + 1

    use_impact = metric in ("impact", "risk")
    unbounded_kind = EdgeKind.ENTRY if use_impact else EdgeKind.SINK
    weights = [e.impact_weight if use_impact else e.exploitability_weight for e in circuit.edges]
    infinite = 1 + sum(
        to_fixed(w) for w, e in zip(weights, circuit.edges, strict=True) if e.kind != unbounded_kind
    )

    arcs = [
        Arc(
            tail=index[edge.source],
            head=index[edge.target],
            capacity=_capacity(edge.kind, weight, unbounded_kind, infinite),
            cost=0 if edge.kind == EdgeKind.SINK else resistance(edge.exploitability_weight),
        )
        for edge, weight in zip(circuit.edges, weights, strict=True)
    ]
    arcs += [Arc(tail=super_source, head=index[s], capacity=infinite) for s in circuit.sources]
    arcs += [Arc(tail=index[t], head=super_sink, capacity=infinite) for t in circuit.sinks]

    network = FlowNetwork(n=len(vertex_ids) + 2, arcs=arcs, source=super_source, sink=super_sink)
    return network, vertex_ids + ["<source>", "<sink>"]


def solve_circuit(
    circuit: AttackCircuit,
    metric: Metric,
    config: ScoringConfig | None = None,
) -> SolvedCircuit:
    """
    Solve the problem behind a metric.

    impact: maximum flow; exploitability: minimum-cost flow at the required flow
    (default the maximum flow); risk: minimum-cost maximum flow.
    """
    config = config or ScoringConfig()
    network, vertex_ids = to_flow_network(circuit, metric)

    if metric == "impact":
        assignment = flow_solver.max_flow(network)
    elif metric == "exploitability":
        required = config.required_flow
        if required is None:
            required = flow_solver.max_flow_value(network)
        assignment = flow_solver.min_cost_flow(network, required)
    else:
        assignment = flow_solver.min_cost_max_flow(network)

    logger.info(
        "Solved circuit",
        metric=metric,
        flow_value=from_fixed(assignment.total_value),
        cost=from_fixed(assignment.total_cost),
    )
    return SolvedCircuit(
        metric=metric,
        network=network,
        assignment=assignment,
        vertex_ids=vertex_ids,
    )


# =============================================================================
# Device scores
# =============================================================================


def compositional(
    circuit: AttackCircuit,
    scores: Mapping[str, BaseScores],
    flows: SolvedCircuit,
    config: ScoringConfig | None = None,
) -> dict[str, tuple[float, float]]:
    """
    (EC, IC) per device.

    EC_d = sum over c in d of EB_c + v_d * sum(f(c_i -> c) * EB_ci) over links into c;
    IC_d mirrors it over links out of c with IB.
    """
    config = config or ScoringConfig()
    vertices = circuit.vertex_index()

    inflow: dict[str, float] = {}
    outflow: dict[str, float] = {}
    for i, edge in enumerate(circuit.edges):
        if edge.kind != EdgeKind.LINK:
            continue
        flow = flows.edge_flow(i)
        if flow == 0:
            continue
        upstream = vertices[edge.source]
        downstream = vertices[edge.target]
        down_cve = cve_vertex_id(downstream.cve_id, downstream.device_id)
        up_cve = cve_vertex_id(upstream.cve_id, upstream.device_id)
        inflow[down_cve] = inflow.get(down_cve, 0.0) + flow * scores[upstream.cve_id].eb
        outflow[up_cve] = outflow.get(up_cve, 0.0) + flow * scores[downstream.cve_id].ib

    result: dict[str, tuple[float, float]] = {}
    for device_id, cve_vertices in circuit.devices.items():
        ec = ic = 0.0
        for vertex_id in cve_vertices:
            base = scores[vertices[vertex_id].cve_id]
            ec += base.eb + config.dampener * inflow.get(vertex_id, 0.0)
            ic += base.ib + config.dampener * outflow.get(vertex_id, 0.0)
        result[device_id] = (ec, ic)
    return result


def score_arguments(
    ec: float,
    ic: float,
    profile: TrafficProfile,
    config: ScoringConfig | None = None,
) -> tuple[float, float]:
    """Pre-sigmoid arguments (EC * NU * EN / v_n1, IC * IP / v_n2)."""
    config = config or ScoringConfig()
    v_n1, v_n2 = config.normalizers[0], config.normalizers[1]
    e_arg = ec * profile.nu_multiplier * profile.en_multiplier / v_n1
    i_arg = ic * profile.ip_multiplier / v_n2
    return e_arg, i_arg


def final_scores(
    ec: float,
    ic: float,
    profile: TrafficProfile,
    config: ScoringConfig | None = None,
) -> tuple[float, float]:
    e_arg, i_arg = score_arguments(ec, ic, profile, config)
    return sigma(e_arg), sigma(i_arg)


def cve_flows(circuit: AttackCircuit, flows: SolvedCircuit) -> dict[str, float]:
    """Total flow entering each CVE vertex through its input edges."""
    cve_ids = {v.id for v in circuit.vertices if v.kind == VertexKind.CVE}
    through = dict.fromkeys(sorted(cve_ids), 0.0)
    for i, edge in enumerate(circuit.edges):
        if edge.target in cve_ids:
            through[edge.target] += flows.edge_flow(i)
    return through


def risk_triple(
    circuit: AttackCircuit,
    flows: SolvedCircuit,
    scores: Mapping[str, BaseScores],
    config: ScoringConfig | None = None,
) -> tuple[dict[str, tuple[float, float, float]], tuple[float, float, float]]:
    """
    Confidentiality, integrity and availability risk per device and for the network.

    R_x(d) = sigma(sum over c in d of I_x(c) * flow into c / v_n)
    """
    config = config or ScoringConfig()
    v_conf, v_integ, v_avail = config.normalizers[2:]
    vertices = circuit.vertex_index()
    through = cve_flows(circuit, flows)

    def triple(cve_vertices: list[str]) -> tuple[float, float, float]:
        conf = integ = avail = 0.0
        for vertex_id in cve_vertices:
            base = scores[vertices[vertex_id].cve_id]
            flow = through.get(vertex_id, 0.0)
            conf += base.i_conf * flow
            integ += base.i_integ * flow
            avail += base.i_avail * flow
        return sigma(conf / v_conf), sigma(integ / v_integ), sigma(avail / v_avail)

    per_device = {d: triple(ids) for d, ids in circuit.devices.items()}
    return per_device, triple(sorted(through))


# =============================================================================
# Network scores and paths
# =============================================================================


def path_report(flows: SolvedCircuit) -> list[AttackPath]:
    """Flow decomposition into attacker-to-target paths, by flow desc then cost asc."""
    costed = flows.metric != "impact"
    inner = set(range(len(flows.vertex_ids) - 2))

    paths = [
        AttackPath(
            vertices=[flows.vertex_ids[v] for v in path.vertices if v in inner],
            flow=from_fixed(path.flow),
            cost=from_fixed(path.unit_cost) if costed else None,
        )
        for path in flow_solver.decompose(flows.network, flows.assignment)
    ]
    paths.sort(key=lambda p: (-p.flow, p.cost or 0.0))
    return paths


def network_scores(
    devices: list[DeviceScore],
    circuit: AttackCircuit,
    solved: Mapping[str, SolvedCircuit],
    scores: Mapping[str, BaseScores],
    profiles: Mapping[str, TrafficProfile],
    config: ScoringConfig | None = None,
) -> NetworkScore:
    """
    Network-wide scores.

    E_N applies the sigmoid once to the sum of the devices' pre-sigmoid arguments.
    I_N normalizes the impact max-flow value, scaled by the largest IP multiplier.
    """
    config = config or ScoringConfig()
    if not devices:
        return NetworkScore()

    e_n = sigma(sum(d.e_arg for d in devices))

    ip = max((p.ip_multiplier for p in profiles.values()), default=1.0)
    i_n = 0.0
    if "impact" in solved:
        i_n = sigma(solved["impact"].value * ip / config.normalizers[1])

    r_conf = r_integ = r_avail = 0.0
    if "risk" in solved:
        _, (r_conf, r_integ, r_avail) = risk_triple(circuit, solved["risk"], scores, config)

    return NetworkScore(
        e_n=e_n,
        i_n=i_n,
        r_conf=r_conf,
        r_integ=r_integ,
        r_avail=r_avail,
        paths={metric: path_report(s) for metric, s in solved.items()},
    )


def score(
    circuit: AttackCircuit,
    scores: Mapping[str, BaseScores],
    profiles: Mapping[str, TrafficProfile],
    config: ScoringConfig | None = None,
) -> ScoreReport:
    """
    Solve the three problems and assemble the full score report.

    Args:
        circuit: Built attack circuit
        scores: cve_id -> base scores
        profiles: device_id -> traffic profile (every circuit device)
        config: Scoring knobs

    Returns:
        ScoreReport with per-CVE, per-device and network scores
    """
    config = config or ScoringConfig()
    solved = {metric: solve_circuit(circuit, metric, config) for metric in METRICS}
    coupling = solved["risk"] if config.flow_problem == "min_cost_max_flow" else solved["impact"]

    composed = compositional(circuit, scores, coupling, config)
    risks, _ = risk_triple(circuit, solved["risk"], scores, config)

    devices: list[DeviceScore] = []
    for device_id in sorted(circuit.devices):
        profile = profiles[device_id]
        ec, ic = composed[device_id]
        e_arg, i_arg = score_arguments(ec, ic, profile, config)
        r_conf, r_integ, r_avail = risks[device_id]
        devices.append(
            DeviceScore(
                device_id=device_id,
                ec=ec,
                ic=ic,
                e=sigma(e_arg),
                i=sigma(i_arg),
                r_conf=r_conf,
                r_integ=r_integ,
                r_avail=r_avail,
                e_arg=e_arg,
                i_arg=i_arg,
                multipliers={
                    "nu": profile.nu_multiplier,
                    "en": profile.en_multiplier,
                    "ip": profile.ip_multiplier,
                },
                uptime_class=profile.uptime_class,
            )
        )

    circuit_profiles = {d: profiles[d] for d in circuit.devices}
    network = network_scores(devices, circuit, solved, scores, circuit_profiles, config)

    vertices = circuit.vertex_index()
    cves = [
        CveScore(
            cve_id=vertices[vertex_id].cve_id,
            device_id=device_id,
            **scores[vertices[vertex_id].cve_id].model_dump(),
        )
        for device_id in sorted(circuit.devices)
        for vertex_id in circuit.devices[device_id]
    ]

    notes = [NORMALIZER_NOTE, MULTIPLIER_NOTE]
    if any(p.static_defaults for p in circuit_profiles.values()):
        notes.append(STATIC_DEFAULTS_NOTE)

    logger.info(
        "Scored network",
        device_count=len(devices),
        e_n=round(network.e_n, 4),
        i_n=round(network.i_n, 4),
    )
    return ScoreReport(
        notes=notes,
        config=config.model_dump(mode="json"),
        cves=cves,
        devices=devices,
        network=network,
    )

