"""Integer max-flow and min-cost flow over fixed-point flow networks."""

from decimal import ROUND_HALF_UP, Decimal

import networkx as nx
import structlog
from networkx.algorithms.flow import edmonds_karp

from src.core.exceptions import FlowInvariantError, InfeasibleFlowError
from src.core.models import FlowAssignment, FlowNetwork, FlowPath

logger = structlog.get_logger(__name__)

SCALE = 1000
EB_SCALE_MAX = 10.0


def to_fixed(value: float, scale: int = SCALE) -> int:
    """Scale a real to an integer, rounding half away from zero."""
    return int((Decimal(str(value)) * scale).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def from_fixed(value: int, scale: int = SCALE) -> float:
    return value / scale


def resistance(exploitability_weight: float) -> int:
    """Fixed-point edge cost: round(1000 * (1 - weight / 10))."""
    if not 0.0 <= exploitability_weight <= EB_SCALE_MAX:
        raise ValueError(f"exploitability weight {exploitability_weight} outside [0, 10]")
    normalized = 1 - Decimal(str(exploitability_weight)) / Decimal(str(EB_SCALE_MAX))
    return int((normalized * SCALE).quantize(Decimal(1), rounding=ROUND_HALF_UP))


# =============================================================================
# Graph conversion
# =============================================================================


def _arc_node(index: int) -> tuple[str, int]:
    return ("arc", index)


def _to_digraph(net: FlowNetwork) -> nx.DiGraph:
    """
    Each arc i becomes tail -> ("arc", i) -> head so that parallel arcs survive
    the conversion to a simple DiGraph. The cost sits on the first half.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(range(net.n))
    for i, arc in enumerate(net.arcs):
        middle = _arc_node(i)
        graph.add_edge(arc.tail, middle, capacity=arc.capacity, weight=arc.cost)
        graph.add_edge(middle, arc.head, capacity=arc.capacity, weight=0)
    return graph


def _assignment(net: FlowNetwork, flow_dict: dict) -> FlowAssignment:
    flows = [flow_dict[arc.tail][_arc_node(i)] for i, arc in enumerate(net.arcs)]
    total_value = sum(f for f, arc in zip(flows, net.arcs, strict=True) if arc.tail == net.source)
    total_value -= sum(
        f for f, arc in zip(flows, net.arcs, strict=True) if arc.head == net.source
    )
    total_cost = sum(f * arc.cost for f, arc in zip(flows, net.arcs, strict=True))
    assignment = FlowAssignment(flows=flows, total_value=total_value, total_cost=total_cost)
    verify(net, assignment)
    return assignment


def verify(net: FlowNetwork, assignment: FlowAssignment) -> None:
    """
    Check capacity and conservation constraints.

    Raises:
        FlowInvariantError: on any violated arc or vertex
    """
    if len(assignment.flows) != len(net.arcs):
        raise FlowInvariantError("assignment does not cover every arc")

    balance = [0] * net.n
    for i, (flow, arc) in enumerate(zip(assignment.flows, net.arcs, strict=True)):
        if not 0 <= flow <= arc.capacity:
            raise FlowInvariantError(
                f"arc {i} ({arc.tail}->{arc.head}) carries {flow}, capacity {arc.capacity}"
            )
        balance[arc.tail] -= flow
        balance[arc.head] += flow

    for v, net_inflow in enumerate(balance):
        if v not in (net.source, net.sink) and net_inflow != 0:
            raise FlowInvariantError(f"vertex {v} violates conservation by {net_inflow}")


# =============================================================================
# Solvers
# =============================================================================


def max_flow(net: FlowNetwork) -> FlowAssignment:
    """Maximum s-t flow by shortest augmenting paths."""
    graph = _to_digraph(net)
    value, flow_dict = nx.maximum_flow(graph, net.source, net.sink, flow_func=edmonds_karp)
    assignment = _assignment(net, flow_dict)
    if assignment.total_value != value:
        raise FlowInvariantError(f"flow value {assignment.total_value} != solver value {value}")
    logger.debug("Solved max flow", value=value, arc_count=len(net.arcs))
    return assignment


def max_flow_value(net: FlowNetwork) -> int:
    return nx.maximum_flow_value(_to_digraph(net), net.source, net.sink, flow_func=edmonds_karp)


def min_cost_flow(net: FlowNetwork, required: int) -> FlowAssignment:
    """
    Ship exactly `required` units from source to sink at minimum total cost.

    Raises:
        InfeasibleFlowError: required exceeds the maximum flow value
    """
    if required < 0:
        raise ValueError("required flow must be non-negative")
    max_feasible = max_flow_value(net)
    if required > max_feasible:
        raise InfeasibleFlowError(required=required, max_feasible=max_feasible)

    graph = _to_digraph(net)
    graph.nodes[net.source]["demand"] = -required
    graph.nodes[net.sink]["demand"] = required
    flow_dict = nx.min_cost_flow(graph, demand="demand", capacity="capacity", weight="weight")

    assignment = _assignment(net, flow_dict)
    if assignment.total_value != required:
        raise FlowInvariantError(
            f"min-cost flow shipped {assignment.total_value}, required {required}"
        )
    logger.debug(
        "Solved min-cost flow",
        required=required,
        cost=assignment.total_cost,
        arc_count=len(net.arcs),
    )
    return assignment


def min_cost_max_flow(net: FlowNetwork) -> FlowAssignment:
    """Cheapest among all maximum flows."""
    return min_cost_flow(net, max_flow_value(net))


# =============================================================================
# Decomposition
# =============================================================================


def _cancel_cycle(cycle: list[int], remaining: list[int]) -> None:
    amount = min(remaining[i] for i in cycle)
    for i in cycle:
        remaining[i] -= amount


def decompose(net: FlowNetwork, assignment: FlowAssignment) -> list[FlowPath]:
    """
    Split a feasible assignment into source-to-sink paths.

    Walks always take the lowest-index arc with remaining flow. Flow cycles met
    on the way are cancelled; they carry no source-to-sink value.
    """
    remaining = list(assignment.flows)
    outgoing: dict[int, list[int]] = {v: [] for v in range(net.n)}
    for i, arc in enumerate(net.arcs):
        outgoing[arc.tail].append(i)

    def next_arc(v: int) -> int | None:
        return next((i for i in outgoing[v] if remaining[i] > 0), None)

    paths: list[FlowPath] = []
    while next_arc(net.source) is not None:
        vertices = [net.source]
        arcs: list[int] = []
        position = {net.source: 0}
        cancelled = False

        while vertices[-1] != net.sink:
            i = next_arc(vertices[-1])
            if i is None:
                # Conservation holds, so only a cancelled cycle can strand a walk
                raise FlowInvariantError(f"flow stranded at vertex {vertices[-1]}")
            head = net.arcs[i].head
            if head in position:
                _cancel_cycle(arcs[position[head] :] + [i], remaining)
                cancelled = True
                break
            arcs.append(i)
            vertices.append(head)
            position[head] = len(vertices) - 1

        if cancelled:
            continue

        amount = min(remaining[i] for i in arcs)
        for i in arcs:
            remaining[i] -= amount
        paths.append(
            FlowPath(
                vertices=vertices,
                arcs=arcs,
                flow=amount,
                unit_cost=sum(net.arcs[i].cost for i in arcs),
            )
        )

    return paths
