"""Pytest fixtures for the attack-circuit engine: feeds, catalogs, traffic and circuits."""

import json
import shutil
import tempfile
from pathlib import Path

import pytest

from src.core.config import get_settings
from src.core.models import BaseScores, CveRecord, IoPair
from src.services.cvss import base_scores, parse_vector

ROKU_CVE = "CVE-2018-11314"
ROKU_DESCRIPTION = (
    "The External Control API in Roku and Roku TV products allow unauthorized access "
    "via a DNS Rebind attack."
)
ROKU_VECTOR = "CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:L/I:N/A:N"

ECHO_CVE = "CVE-2018-11567"
ECHO_DESCRIPTION = (
    "Amazon Echo devices with a custom skill allow remote eavesdropping through a "
    "reprompt feature."
)
ECHO_VECTOR = "CVSS:3.0/AV:L/AC:L/PR:N/UI:R/S:U/C:L/I:N/A:N"


def nvd_item(cve_id: str, description: str | None, vector: str | None) -> dict:
    """One NVD 1.1 feed item; None leaves the description or the v3 metric out."""
    item: dict = {
        "cve": {
            "CVE_data_meta": {"ID": cve_id},
            "description": {"description_data": []},
        },
        "impact": {},
    }
    if description is not None:
        item["cve"]["description"]["description_data"].append(
            {"lang": "en", "value": description}
        )
    if vector is not None:
        item["impact"]["baseMetricV3"] = {"cvssV3": {"vectorString": vector}}
    return item


def nvd_feed(items: list[dict]) -> bytes:
    return json.dumps({"CVE_data_type": "CVE", "CVE_Items": items}).encode("utf-8")


def cve_record(cve_id: str, device_id: str, vector: str, description: str = "n/a") -> CveRecord:
    return CveRecord(
        cve_id=cve_id,
        description=description,
        cvss=parse_vector(vector),
        device_id=device_id,
    )


def scores_of(eb: float, ib: float, conf: float = 0.22) -> BaseScores:
    """Hand-made base scores for circuits whose exact CVSS vector does not matter."""
    return BaseScores(eb=eb, ib=ib, isc_base=conf, i_conf=conf, i_integ=0.0, i_avail=0.0)


@pytest.fixture(autouse=True)
def clear_settings_cache(monkeypatch):
    """Settings are cached per process; start every test from a clean environment."""
    monkeypatch.delenv("ATTACK_CIRCUIT_CONFIG", raising=False)
    monkeypatch.delenv("ATTACK_CIRCUIT_OUTPUT_DIR", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def workspace():
    """Temporary directory removed after the test."""
    temp_dir = Path(tempfile.mkdtemp())
    yield temp_dir
    shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture
def feed_bytes():
    """A feed with the Roku and Echo CVEs plus two unusable items."""
    return nvd_feed(
        [
            nvd_item(ROKU_CVE, ROKU_DESCRIPTION, ROKU_VECTOR),
            nvd_item(ECHO_CVE, ECHO_DESCRIPTION, ECHO_VECTOR),
            nvd_item("CVE-2018-0001", None, ROKU_VECTOR),
            nvd_item("CVE-2018-0002", "No CVSS v3 metric on this one.", None),
        ]
    )


@pytest.fixture
def catalog_entries():
    return [
        {
            "device_id": "echo",
            "device_name": "Amazon Echo Dot",
            "cve_ids": [ECHO_CVE],
            "ip_addresses": ["192.168.1.20"],
        },
        {
            "device_id": "roku",
            "device_name": "Roku Media Player",
            "cve_ids": [ROKU_CVE, "CVE-2019-9999"],
            "ip_addresses": ["192.168.1.30"],
        },
    ]


@pytest.fixture
def traffic_csv():
    """Packet log: echo over TLS, roku over HTTP to a blacklisted host, one foreign row."""
    return (
        "No.,Time,Source,Destination,Protocol,Length,Info\n"
        "1,0.0,192.168.1.20,52.94.1.1,TLSv1.2,120,Application Data\n"
        "2,650.5,192.168.1.30,203.0.113.9,HTTP,300,GET /query\n"
        "3,120.0,192.168.1.20,52.94.1.1,TLSv1.2,80,Application Data\n"
        "4,5999.0,10.0.0.5,10.0.0.6,DNS,70,Standard query\n"
        "5,1300.0,192.168.1.30,192.168.1.20,HTTP,90,POST /keys\n"
    ).encode("utf-8")


@pytest.fixture
def input_files(workspace, feed_bytes, catalog_entries, traffic_csv):
    """Feed, catalog, traffic log and blacklist written to disk."""
    paths = {
        "nvd": workspace / "nvdcve-1.1-2018.json",
        "catalog": workspace / "catalog.json",
        "traffic": workspace / "capture.csv",
        "blacklist": workspace / "blacklist.txt",
    }
    paths["nvd"].write_bytes(feed_bytes)
    paths["catalog"].write_text(json.dumps(catalog_entries), encoding="utf-8")
    paths["traffic"].write_bytes(traffic_csv)
    paths["blacklist"].write_text("# known bad\n203.0.113.9\n", encoding="utf-8")
    return paths


@pytest.fixture
def echo_record():
    return cve_record(ECHO_CVE, "echo", ECHO_VECTOR, ECHO_DESCRIPTION)


@pytest.fixture
def echo_pairs():
    """Hand-written pairs of the Echo CVE: one input, three outputs."""
    return {
        ECHO_CVE: [
            IoPair(cve_id=ECHO_CVE, input="remote eavesdropping", output=output)
            for output in ("amazon echo devices", "custom skill", "reprompt feature")
        ]
    }


@pytest.fixture
def single_cve_inputs():
    """records, pairs and scores of a one-CVE, one-pair circuit."""
    records = {"echo": [cve_record(ECHO_CVE, "echo", ECHO_VECTOR)]}
    pairs = {ECHO_CVE: [IoPair(cve_id=ECHO_CVE, input="remote eavesdropping", output="skill")]}
    scores = {ECHO_CVE: base_scores(parse_vector(ECHO_VECTOR))}
    return records, pairs, scores


@pytest.fixture
def chain_inputs():
    """Two CVEs on two devices where the first one's output feeds the second's input."""
    first, second = "CVE-2020-0001", "CVE-2020-0002"
    records = {
        "wemo": [cve_record(first, "wemo", ROKU_VECTOR)],
        "echo": [cve_record(second, "echo", ROKU_VECTOR)],
    }
    pairs = {
        first: [IoPair(cve_id=first, input="network access", output="root shell")],
        second: [IoPair(cve_id=second, input="root shell", output="data leak")],
    }
    scores = {first: scores_of(3.0, 2.0), second: scores_of(2.0, 5.0)}
    return records, pairs, scores
