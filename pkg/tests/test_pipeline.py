"""Tests for the assessment pipeline."""

import json
import time

import pytest

from src.core.config import RunConfig
from src.core.exceptions import CatalogError, ConfigError, MissingArtifactError
from src.services.cve_ingest import cache_document
from src.services.pipeline import (
    CACHE_DIR,
    PROCESSED_DIR,
    AssessmentPipeline,
    assess_network,
    device_artifact,
)
from src.services.scoring import STATIC_DEFAULTS_NOTE
from src.utils.formatters import format_processed_cves
from src.utils.io import ArtifactWriter
from tests.conftest import ECHO_CVE, ROKU_CVE, ROKU_VECTOR, nvd_feed, nvd_item


@pytest.fixture
def run_config(input_files, workspace):
    return RunConfig(
        nvd=[input_files["nvd"]],
        catalog=input_files["catalog"],
        out=workspace / "out",
    )


def write_artifacts(extraction, out_dir):
    writer = ArtifactWriter(out_dir)
    for device_id in extraction.device_ids:
        records = extraction.records[device_id]
        writer.write_json(device_artifact(CACHE_DIR, device_id), cache_document(device_id, records))
        writer.write_json(
            device_artifact(PROCESSED_DIR, device_id),
            format_processed_cves(extraction.device_names[device_id], records, extraction.pairs),
        )


class TestExtract:
    """Tests for the ingest and extraction stage."""

    def test_devices_and_pairs(self, run_config):
        extraction = AssessmentPipeline.extract(run_config)

        assert extraction.device_ids == ["echo", "roku"]
        assert extraction.device_names["roku"] == "Roku Media Player"
        assert extraction.unresolved == ["CVE-2019-9999"]
        serialized = [p.serialize() for p in extraction.pairs[ROKU_CVE]]
        assert "dns rebind attack->this:unauthorized access" in serialized
        assert set(extraction.scores) == {ROKU_CVE, ECHO_CVE}

    def test_raw_inputs_required(self, workspace):
        with pytest.raises(ConfigError):
            AssessmentPipeline.extract(RunConfig(out=workspace))

    def test_empty_catalog(self, input_files, workspace):
        empty = workspace / "empty.json"
        empty.write_text("[]", encoding="utf-8")
        config = RunConfig(nvd=[input_files["nvd"]], catalog=empty, out=workspace)

        with pytest.raises(CatalogError, match="no devices"):
            AssessmentPipeline.extract(config)

    def test_feeds_concatenated(self, input_files, workspace):
        extra = workspace / "extra.json"
        extra.write_bytes(nvd_feed([nvd_item("CVE-2019-9999", "Replay attack.", ROKU_VECTOR)]))
        config = RunConfig(
            nvd=[input_files["nvd"], extra],
            catalog=input_files["catalog"],
            out=workspace,
        )

        extraction = AssessmentPipeline.extract(config)

        assert extraction.unresolved == []
        assert [r.cve_id for r in extraction.records["roku"]] == [ROKU_CVE, "CVE-2019-9999"]


class TestArtifacts:
    """Tests for reloading an earlier extraction."""

    def test_load_extraction(self, run_config):
        extraction = AssessmentPipeline.extract(run_config)
        write_artifacts(extraction, run_config.out)

        loaded = AssessmentPipeline.load_extraction(run_config.out)

        assert loaded.device_ids == extraction.device_ids
        assert loaded.device_names == extraction.device_names
        assert loaded.records == extraction.records
        assert loaded.pairs == extraction.pairs

    def test_extraction_for_prefers_artifacts_without_raw_inputs(self, run_config):
        write_artifacts(AssessmentPipeline.extract(run_config), run_config.out)

        loaded = AssessmentPipeline.extraction_for(RunConfig(out=run_config.out))

        assert loaded.catalog is None
        assert loaded.device_ids == ["echo", "roku"]

    def test_missing_artifacts(self, workspace):
        with pytest.raises(MissingArtifactError):
            AssessmentPipeline.extraction_for(RunConfig(out=workspace))


class TestProcess:
    """End-to-end pipeline runs."""

    def test_static_profiles(self, run_config):
        result = AssessmentPipeline.process(run_config)

        assert [d.device_id for d in result.report.devices] == ["echo", "roku"]
        assert STATIC_DEFAULTS_NOTE in result.report.notes
        assert all(p.static_defaults for p in result.profiles.values())

    def test_network_above_every_device(self, run_config):
        report = AssessmentPipeline.process(run_config).report

        assert all(report.network.e_n > d.e for d in report.devices)

    def test_traffic_profiles(self, run_config, input_files):
        config = run_config.model_copy(
            update={"traffic": input_files["traffic"], "blacklist": input_files["blacklist"]}
        )

        result = AssessmentPipeline.process(config)

        assert STATIC_DEFAULTS_NOTE not in result.report.notes
        assert result.profiles["roku"].ip_multiplier == 2.0
        assert result.profiles["echo"].en_multiplier == 1.0

    def test_traffic_needs_catalog(self, run_config, input_files):
        extraction = AssessmentPipeline.extract(run_config)
        extraction.catalog = None
        config = RunConfig(out=run_config.out, traffic=input_files["traffic"])

        with pytest.raises(ConfigError):
            AssessmentPipeline.profiles(extraction, config)

    def test_convenience_function(self, run_config):
        first = assess_network(run_config).report
        second = AssessmentPipeline.process(run_config).report

        assert first == second

    def test_many_cves_quickly(self, workspace):
        """150 CVEs over five devices are assessed in a few seconds."""
        items = [
            nvd_item(
                f"CVE-2022-{i:04d}",
                f"Replay attack exposes gateway{i} credentials.",
                ROKU_VECTOR,
            )
            for i in range(150)
        ]
        entries = [
            {
                "device_id": f"dev{d}",
                "device_name": f"Device {d}",
                "cve_ids": [f"CVE-2022-{i:04d}" for i in range(d, 150, 5)],
            }
            for d in range(5)
        ]
        (workspace / "feed.json").write_bytes(nvd_feed(items))
        (workspace / "catalog.json").write_text(json.dumps(entries), encoding="utf-8")
        config = RunConfig(
            nvd=[workspace / "feed.json"],
            catalog=workspace / "catalog.json",
            out=workspace / "out",
        )

        started = time.perf_counter()
        result = AssessmentPipeline.process(config)
        elapsed = time.perf_counter() - started

        assert len(result.report.cves) == 150
        assert elapsed < 5.0
