"""One function per subcommand. Each writes its artifacts and returns the stdout text."""

from collections.abc import Callable

import structlog

from src.core.config import Metric, RunConfig
from src.core.models import AttackCircuit
from src.services import scoring
from src.services.circuit import export_graph, load_adjacency, to_adjacency
from src.services.cve_ingest import cache_document
from src.services.pipeline import (
    CACHE_DIR,
    CIRCUIT_FILE,
    PROCESSED_DIR,
    AssessmentPipeline,
    ExtractionResult,
    device_artifact,
)
from src.utils.formatters import (
    format_paths,
    format_processed_cves,
    format_score_report,
    format_score_table,
)
from src.utils.io import ArtifactWriter, partial_outputs, read_artifact

logger = structlog.get_logger(__name__)

SCORE_REPORT_FILE = "score_report.json"
SCORE_TABLE_FILE = "score_table.txt"


def _load_circuit(config: RunConfig) -> AttackCircuit:
    return load_adjacency(read_artifact(config.out, CIRCUIT_FILE, "circuit"))


def _write_circuit(writer: ArtifactWriter, circuit: AttackCircuit) -> None:
    writer.write_json(CIRCUIT_FILE, to_adjacency(circuit))


def _export(writer: ArtifactWriter, circuit: AttackCircuit, metric: Metric, fmt: str) -> str:
    dot, adjacency = export_graph(circuit, metric)
    name = f"circuit_{metric}.{fmt}"
    if fmt == "dot":
        writer.write_text(name, dot)
    else:
        writer.write_json(name, adjacency)
    return str(writer.path(name))


def _write_extraction(writer: ArtifactWriter, extraction: ExtractionResult) -> list[str]:
    """Normalized cache and processed-CVE document per device; one summary line each."""
    lines: list[str] = []
    for device_id in extraction.device_ids:
        records = extraction.records[device_id]
        name = extraction.device_names[device_id]
        writer.write_json(
            device_artifact(CACHE_DIR, device_id),
            cache_document(device_id, records),
        )
        processed = writer.write_json(
            device_artifact(PROCESSED_DIR, device_id),
            format_processed_cves(name, records, extraction.pairs),
        )
        pair_count = sum(len(extraction.pairs.get(r.cve_id, [])) for r in records)
        lines.append(f"{device_id}: {len(records)} CVEs, {pair_count} i/o pairs -> {processed}")
    return lines


def cmd_extract(config: RunConfig) -> str:
    extraction = AssessmentPipeline.extract(config)
    with partial_outputs(config.out) as writer:
        lines = _write_extraction(writer, extraction)
    if extraction.unresolved:
        lines.append(f"unresolved CVEs: {', '.join(extraction.unresolved)}")
    return "\n".join(lines) + "\n"


def cmd_build(config: RunConfig) -> str:
    extraction = AssessmentPipeline.extraction_for(config)
    circuit = AssessmentPipeline.build(extraction, config)
    with partial_outputs(config.out) as writer:
        _write_circuit(writer, circuit)
    return (
        f"circuit: {len(circuit.vertices)} vertices, {len(circuit.edges)} edges, "
        f"{len(circuit.dropped_edges)} dropped, {len(circuit.unreachable)} unreachable "
        f"-> {writer.path(CIRCUIT_FILE)}\n"
    )


def cmd_score(config: RunConfig) -> str:
    """Build, solve and score; writes the circuit, the JSON report and the text table."""
    result = AssessmentPipeline.process(config)
    table = format_score_table(result.report, result.extraction.device_names)
    with partial_outputs(config.out) as writer:
        _write_circuit(writer, result.circuit)
        writer.write_json(SCORE_REPORT_FILE, format_score_report(result.report))
        writer.write_text(SCORE_TABLE_FILE, table)
    return table


def cmd_paths(config: RunConfig) -> str:
    circuit = _load_circuit(config)
    solved = scoring.solve_circuit(circuit, config.metric, config.scoring)
    return format_paths(scoring.path_report(solved), config.metric)


def cmd_export(config: RunConfig) -> str:
    circuit = _load_circuit(config)
    with partial_outputs(config.out) as writer:
        path = _export(writer, circuit, config.metric, config.format)
    return f"{path}\n"


def cmd_report(config: RunConfig) -> str:
    """Extract, build, score, export DOT for every metric and list every metric's paths."""
    result = AssessmentPipeline.process(config)
    extraction = result.extraction
    table = format_score_table(result.report, extraction.device_names)
    listings: list[str] = []

    with partial_outputs(config.out) as writer:
        _write_extraction(writer, extraction)
        _write_circuit(writer, result.circuit)
        writer.write_json(SCORE_REPORT_FILE, format_score_report(result.report))
        writer.write_text(SCORE_TABLE_FILE, table)
        for metric in scoring.METRICS:
            _export(writer, result.circuit, metric, "dot")
            listing = format_paths(result.report.network.paths.get(metric, []), metric)
            writer.write_text(f"paths_{metric}.txt", listing)
            listings.append(listing)

    logger.info("Report written", out=str(config.out))
    return table + "\n" + "\n".join(listings)


COMMANDS: dict[str, Callable[[RunConfig], str]] = {
    "extract": cmd_extract,
    "build": cmd_build,
    "score": cmd_score,
    "paths": cmd_paths,
    "export": cmd_export,
    "report": cmd_report,
}
