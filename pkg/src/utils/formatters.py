"""Output formatters for score tables, path listings and processed-CVE JSON."""

from collections.abc import Mapping
from decimal import ROUND_HALF_UP, Decimal

from src.core.models import AttackPath, CveRecord, IoPair, ScoreReport

ROW_LABEL_WIDTH = 28


def round_1(value: float) -> float:
    """Subscore display rounding to one decimal, half up."""
    return float(Decimal(str(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def _subject(name: str) -> str:
    return name.replace(" ", "_")


def format_score_table(
    report: ScoreReport,
    device_names: Mapping[str, str] | None = None,
) -> str:
    """
    Format device and network scores as a text table.

    Five rows per subject (E, I, R_Conf, R_Integ, R_Avail), devices first and the
    network last, followed by the CVE base scores rounded for display.

    Args:
        report: Score report
        device_names: device_id -> display name; ids are used when missing

    Returns:
        Plain text table
    """
    device_names = device_names or {}
    lines: list[str] = [f"{'Metric':<{ROW_LABEL_WIDTH}}Score", "-" * (ROW_LABEL_WIDTH + 6)]

    subjects = [
        (
            _subject(device_names.get(d.device_id, d.device_id)),
            (d.e, d.i, d.r_conf, d.r_integ, d.r_avail),
        )
        for d in report.devices
    ]
    network = report.network
    subjects.append(
        ("Network", (network.e_n, network.i_n, network.r_conf, network.r_integ, network.r_avail))
    )

    for subject, values in subjects:
        for metric, value in zip(("E", "I", "R_Conf", "R_Integ", "R_Avail"), values, strict=True):
            lines.append(f"{f'{metric}_{subject}':<{ROW_LABEL_WIDTH}}{value:.4f}")

    if report.cves:
        lines += ["", f"{'CVE':<{ROW_LABEL_WIDTH}}EB   IB", "-" * (ROW_LABEL_WIDTH + 8)]
        for cve in report.cves:
            label = f"{cve.cve_id}@{cve.device_id}"
            eb, ib = round_1(cve.eb), round_1(cve.ib)
            lines.append(f"{label:<{ROW_LABEL_WIDTH}}{eb:.1f}  {ib:.1f}")

    if report.notes:
        lines.append("")
        lines += [f"Note: {note}" for note in report.notes]

    return "\n".join(lines) + "\n"


def format_paths(paths: list[AttackPath], metric: str) -> str:
    """
    Format a ranked path listing.

    Each line: rank, flow, cost (when the problem has costs) and the vertex chain.
    """
    if not paths:
        return f"No {metric} paths carry flow.\n"

    lines = [f"{metric} paths ({len(paths)})"]
    for rank, path in enumerate(paths, start=1):
        cost = "" if path.cost is None else f" cost={path.cost:.3f}"
        lines.append(f"{rank:>3}. flow={path.flow:.3f}{cost}  " + " -> ".join(path.vertices))
    return "\n".join(lines) + "\n"


def format_processed_cves(
    device_name: str,
    records: list[CveRecord],
    pairs: Mapping[str, list[IoPair]],
) -> dict:
    """Processed-CVE document of one device, keyed by its display name."""
    return {
        device_name: [
            {
                "description": record.description,
                "id": record.cve_id,
                "i/o": [pair.serialize() for pair in pairs.get(record.cve_id, [])],
            }
            for record in records
        ]
    }


def parse_processed_cves(document: Mapping[str, list[dict]]) -> dict[str, list[IoPair]]:
    """cve_id -> pairs read back from a processed-CVE document."""
    pairs: dict[str, list[IoPair]] = {}
    for entries in document.values():
        for entry in entries:
            pairs[entry["id"]] = [IoPair.parse(entry["id"], value) for value in entry["i/o"]]
    return pairs


def format_score_report(report: ScoreReport) -> dict:
    return report.model_dump(mode="json")
