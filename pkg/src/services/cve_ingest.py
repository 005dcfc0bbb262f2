"""NVD 1.1 JSON feed and device catalog ingestion."""

import json

import structlog
from pydantic import ValidationError

from src.core.exceptions import CatalogError, EmptyFeedError, FeedParseError
from src.core.models import (
    CatalogJoin,
    CveRecord,
    DeviceCatalog,
    FeedParseResult,
    FeedRecord,
)
from src.services.cvss import CvssParseError, parse_vector, serialize_vector

logger = structlog.get_logger(__name__)


def _load_json(raw: bytes, what: str) -> object:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FeedParseError(f"{what} is not UTF-8", offset=e.start) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        # JSONDecodeError.pos counts characters, report bytes
        offset = len(text[: e.pos].encode("utf-8"))
        raise FeedParseError(f"Malformed {what}: {e.msg}", offset=offset) from e


def _english_description(cve: dict) -> str | None:
    entries = cve.get("description", {}).get("description_data", [])
    for entry in entries:
        if entry.get("lang") == "en" and entry.get("value", "").strip():
            return entry["value"].strip()
    return None


def _cvss_v3(item: dict) -> str | None:
    metric = item.get("impact", {}).get("baseMetricV3", {})
    return metric.get("cvssV3", {}).get("vectorString")


def parse_nvd_feed(raw_json: bytes) -> FeedParseResult:
    """
    Parse an NVD 1.1 feed into records carrying an English description and a CVSS v3 vector.

    Items missing either are skipped and counted.

    Raises:
        FeedParseError: the document is not valid JSON (with byte offset)
        EmptyFeedError: no usable item in the feed
    """
    document = _load_json(raw_json, "NVD feed")
    items = document.get("CVE_Items", []) if isinstance(document, dict) else []

    records: list[FeedRecord] = []
    skipped = 0
    for item in items:
        cve = item.get("cve", {})
        cve_id = cve.get("CVE_data_meta", {}).get("ID")
        description = _english_description(cve)
        vector_string = _cvss_v3(item)

        if not cve_id or description is None or vector_string is None:
            skipped += 1
            continue
        try:
            cvss = parse_vector(vector_string)
        except CvssParseError as e:
            logger.warning("Skipping item with bad CVSS vector", cve_id=cve_id, error=str(e))
            skipped += 1
            continue

        records.append(FeedRecord(cve_id=cve_id, description=description, cvss=cvss))

    if not records:
        raise EmptyFeedError(f"Feed has no usable CVE items ({skipped} skipped)")

    logger.info("Parsed NVD feed", record_count=len(records), skipped=skipped)
    return FeedParseResult(records=records, skipped=skipped)


def load_catalog(raw_json: bytes) -> DeviceCatalog:
    """Load a catalog file: a JSON list of device entries."""
    try:
        data = json.loads(raw_json)
    except json.JSONDecodeError as e:
        raise CatalogError(f"Malformed catalog: {e.msg} (position {e.pos})") from e
    if not isinstance(data, list):
        raise CatalogError("Catalog must be a JSON list of devices")
    try:
        return DeviceCatalog(entries=data)
    except ValidationError as e:
        raise CatalogError(f"Invalid catalog: {e}") from e


def join_catalog(feed_records: list[FeedRecord], catalog: DeviceCatalog) -> CatalogJoin:
    """
    Attach feed records to catalog devices.

    Catalog CVE ids absent from the feed are reported as unresolved, not raised.
    """
    by_id: dict[str, FeedRecord] = {}
    for record in feed_records:
        by_id.setdefault(record.cve_id, record)

    joined: dict[str, list[CveRecord]] = {}
    unresolved: list[str] = []

    for entry in catalog.entries:
        records: list[CveRecord] = []
        seen: set[str] = set()
        for cve_id in entry.cve_ids:
            if cve_id in seen:
                continue
            seen.add(cve_id)
            record = by_id.get(cve_id)
            if record is None:
                unresolved.append(cve_id)
                continue
            records.append(
                CveRecord(
                    cve_id=record.cve_id,
                    description=record.description,
                    cvss=record.cvss,
                    device_id=entry.device_id,
                )
            )
        joined[entry.device_id] = records

    if unresolved:
        logger.warning("Catalog CVEs missing from feed", unresolved=unresolved)

    return CatalogJoin(records=joined, unresolved=unresolved)


# =============================================================================
# Normalized per-device cache
# =============================================================================


def cache_document(device_id: str, records: list[CveRecord]) -> dict:
    """Normalized cache object for one device: id, description and vector string per CVE."""
    return {
        "device_id": device_id,
        "cves": [
            {
                "id": record.cve_id,
                "description": record.description,
                "cvss": serialize_vector(record.cvss),
            }
            for record in records
        ],
    }


def read_cache(raw_json: bytes) -> tuple[str, list[CveRecord]]:
    """Inverse of cache_document."""
    document = _load_json(raw_json, "CVE cache")
    if not isinstance(document, dict) or "device_id" not in document:
        raise CatalogError("CVE cache must be an object with a device_id")
    device_id = document["device_id"]
    try:
        records = [
            CveRecord(
                cve_id=entry["id"],
                description=entry["description"],
                cvss=parse_vector(entry["cvss"]),
                device_id=device_id,
            )
            for entry in document.get("cves", [])
        ]
    except (KeyError, CvssParseError, ValidationError) as e:
        raise CatalogError(f"Invalid CVE cache for {device_id}: {e}") from e
    return device_id, records
