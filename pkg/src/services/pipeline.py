"""Assessment pipeline: ingest, extraction, circuit build, traffic profiling and scoring."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import structlog

from src.core.config import RunConfig
from src.core.exceptions import CatalogError, ConfigError, MissingArtifactError
from src.core.models import (
    AttackCircuit,
    BaseScores,
    CveRecord,
    DeviceCatalog,
    FeedRecord,
    IoPair,
    ScoreReport,
    TrafficProfile,
)
from src.services import circuit as circuit_builder
from src.services import scoring
from src.services.cve_ingest import join_catalog, load_catalog, parse_nvd_feed, read_cache
from src.services.cvss import base_scores
from src.services.text_pipeline import extract_pairs
from src.services.traffic import load_blacklist, parse_log, profile_devices
from src.utils.formatters import parse_processed_cves
from src.utils.io import artifact_name, read_bytes

logger = structlog.get_logger(__name__)

CACHE_DIR = "cache"
PROCESSED_DIR = "processed"
CIRCUIT_FILE = "circuit.json"


@dataclass
class ExtractionResult:
    """Per-device CVE records with their extracted pairs and base scores."""

    device_ids: list[str]
    device_names: dict[str, str]
    records: dict[str, list[CveRecord]]
    pairs: dict[str, list[IoPair]]
    scores: dict[str, BaseScores]
    catalog: DeviceCatalog | None = None
    unresolved: list[str] = field(default_factory=list)


@dataclass
class PipelineResult:
    """Everything one full assessment produced."""

    extraction: ExtractionResult
    circuit: AttackCircuit
    profiles: dict[str, TrafficProfile]
    report: ScoreReport


class AssessmentPipeline:
    """Orchestrates the stages; each stage is usable on its own."""

    @classmethod
    def load_feeds(cls, paths: list[Path]) -> list[FeedRecord]:
        """Concatenate feed records in argument order."""
        records: list[FeedRecord] = []
        for path in paths:
            records += parse_nvd_feed(read_bytes(path)).records
        return records

    @classmethod
    def load_catalog(cls, path: Path) -> DeviceCatalog:
        catalog = load_catalog(read_bytes(path))
        if not catalog.entries:
            raise CatalogError("no devices in catalog")
        return catalog

    @classmethod
    def extract(cls, config: RunConfig) -> ExtractionResult:
        """
        Ingest feeds and catalog, then extract input/output pairs.

        Args:
            config: Run configuration with nvd and catalog paths

        Returns:
            ExtractionResult covering every catalog device
        """
        config.validate_paths(require_raw=True)
        catalog = cls.load_catalog(config.catalog)
        joined = join_catalog(cls.load_feeds(config.nvd), catalog)

        names = {entry.device_id: entry.device_name for entry in catalog.entries}
        descriptions: dict[str, str] = {}
        owners: dict[str, str] = {}
        for entry in catalog.entries:
            for record in joined.records[entry.device_id]:
                descriptions.setdefault(record.cve_id, record.description)
                owners.setdefault(record.cve_id, entry.device_name)

        pairs = extract_pairs(
            descriptions.items(),
            config.extraction,
            owner_names=owners,
            device_names=names.values(),
        )
        scores = {
            record.cve_id: base_scores(record.cvss)
            for records in joined.records.values()
            for record in records
        }
        logger.info(
            "Extraction completed",
            device_count=len(names),
            cve_count=len(descriptions),
            unresolved_count=len(joined.unresolved),
        )
        return ExtractionResult(
            device_ids=list(names),
            device_names=names,
            records=joined.records,
            pairs=pairs,
            scores=scores,
            catalog=catalog,
            unresolved=joined.unresolved,
        )

    @classmethod
    def load_extraction(cls, out_dir: Path) -> ExtractionResult:
        """
        Rebuild an extraction from the cache and processed artifacts of an earlier run.

        Raises:
            MissingArtifactError: no extraction artifacts under out_dir
        """
        cache_files = sorted((out_dir / CACHE_DIR).glob("*.json"))
        if not cache_files:
            raise MissingArtifactError(f"no extraction artifacts under {out_dir}; run extract")

        records: dict[str, list[CveRecord]] = {}
        names: dict[str, str] = {}
        pairs: dict[str, list[IoPair]] = {}
        for cache_file in cache_files:
            device_id, device_records = read_cache(cache_file.read_bytes())
            records[device_id] = device_records
            processed = out_dir / PROCESSED_DIR / cache_file.name
            if not processed.is_file():
                raise MissingArtifactError(f"no processed CVEs for {device_id}: {processed}")
            document = json.loads(processed.read_bytes())
            names[device_id] = next(iter(document), device_id)
            pairs.update(parse_processed_cves(document))

        scores = {r.cve_id: base_scores(r.cvss) for rs in records.values() for r in rs}
        return ExtractionResult(
            device_ids=list(records),
            device_names=names,
            records=records,
            pairs=pairs,
            scores=scores,
        )

    @classmethod
    def extraction_for(cls, config: RunConfig) -> ExtractionResult:
        """Raw inputs when given, otherwise the artifacts of an earlier extract."""
        if config.has_raw_inputs:
            return cls.extract(config)
        config.validate_paths()
        return cls.load_extraction(config.out)

    @classmethod
    def build(cls, extraction: ExtractionResult, config: RunConfig) -> AttackCircuit:
        return circuit_builder.build(
            extraction.records,
            extraction.pairs,
            extraction.scores,
            config.scoring,
        )

    @classmethod
    def profiles(
        cls,
        extraction: ExtractionResult,
        config: RunConfig,
    ) -> dict[str, TrafficProfile]:
        """Traffic profiles of every device; static defaults without a traffic log."""
        log = None
        if config.traffic is not None:
            catalog = extraction.catalog
            if catalog is None and config.catalog is not None:
                catalog = cls.load_catalog(config.catalog)
            if catalog is None:
                raise ConfigError("--traffic needs --catalog to attribute packets to devices")
            log = parse_log(read_bytes(config.traffic), catalog)

        blacklist: set[str] = set()
        if config.blacklist is not None:
            blacklist = load_blacklist(read_bytes(config.blacklist).decode("utf-8"))

        return profile_devices(
            extraction.device_ids,
            log,
            blacklist,
            config.activity,
            config.scoring,
        )

    @classmethod
    def process(cls, config: RunConfig) -> PipelineResult:
        """
        Run extract, build, profile and score.

        Args:
            config: Run configuration

        Returns:
            PipelineResult with the circuit and the score report
        """
        extraction = cls.extraction_for(config)
        circuit = cls.build(extraction, config)
        profiles = cls.profiles(extraction, config)
        report = scoring.score(circuit, extraction.scores, profiles, config.scoring)

        logger.info(
            "Pipeline completed",
            device_count=len(extraction.device_ids),
            vertex_count=len(circuit.vertices),
            edge_count=len(circuit.edges),
        )
        return PipelineResult(
            extraction=extraction,
            circuit=circuit,
            profiles=profiles,
            report=report,
        )


def assess_network(config: RunConfig) -> PipelineResult:
    """Convenience function for the pipeline."""
    return AssessmentPipeline.process(config)


def device_artifact(directory: str, device_id: str) -> str:
    return f"{directory}/{artifact_name(device_id)}.json"
