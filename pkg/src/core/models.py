"""Pydantic models for ingested data, extracted phrases, circuits, flows and reports."""

import re
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

CVE_ID_PATTERN = re.compile(r"^CVE-\d{4}-\d{4,}$")


class PosClass(str, Enum):
    """Coarse part-of-speech class used to split inputs from outputs."""

    NOUN = "noun"
    NON_NOUN = "non_noun"


class UptimeClass(str, Enum):
    """How often a device is seen on the network."""

    ALWAYS_ONLINE = "always_online"
    FREQUENTLY_ONLINE = "frequently_online"
    RARELY_ONLINE = "rarely_online"
    NEVER_ONLINE = "never_online"


class VertexKind(str, Enum):
    ATTACKER = "attacker"
    CVE = "cve"
    INPUT = "input"
    OUTPUT = "output"
    TARGET = "target"


class EdgeKind(str, Enum):
    """Which construction rule produced an edge."""

    ENTRY = "entry"  # attacker -> input, no impact score
    EXPLOIT = "exploit"  # input -> cve -> output
    LINK = "link"  # output of one CVE -> input of another
    SINK = "sink"  # output -> target, no exploitability score


# =============================================================================
# CVSS v3
# =============================================================================


class AttackVector(str, Enum):
    NETWORK = "N"
    ADJACENT = "A"
    LOCAL = "L"
    PHYSICAL = "P"


class AttackComplexity(str, Enum):
    LOW = "L"
    HIGH = "H"


class PrivilegesRequired(str, Enum):
    NONE = "N"
    LOW = "L"
    HIGH = "H"


class UserInteraction(str, Enum):
    NONE = "N"
    REQUIRED = "R"


class Scope(str, Enum):
    UNCHANGED = "U"
    CHANGED = "C"


class ImpactLevel(str, Enum):
    HIGH = "H"
    LOW = "L"
    NONE = "N"


class CvssVector(BaseModel):
    """A CVSS v3 base vector."""

    model_config = ConfigDict(frozen=True)

    version: str = "3.1"
    av: AttackVector
    ac: AttackComplexity
    pr: PrivilegesRequired
    ui: UserInteraction
    scope: Scope
    conf: ImpactLevel
    integ: ImpactLevel
    avail: ImpactLevel

    @field_validator("version")
    @classmethod
    def _v3_only(cls, value: str) -> str:
        if value not in ("3.0", "3.1"):
            raise ValueError(f"unsupported CVSS version {value}")
        return value


class BaseScores(BaseModel):
    """Unrounded CVSS v3 subscores of one CVE."""

    model_config = ConfigDict(frozen=True)

    eb: float = Field(..., ge=0.0, le=3.9, description="Base exploitability")
    ib: float = Field(..., ge=0.0, le=6.05, description="Base impact")
    isc_base: float = Field(..., ge=0.0, le=1.0)
    i_conf: float
    i_integ: float
    i_avail: float


# =============================================================================
# Ingest
# =============================================================================


class DeviceEntry(BaseModel):
    """One catalog device."""

    device_id: str = Field(..., min_length=1)
    device_name: str = Field(..., min_length=1)
    cve_ids: list[str] = Field(default_factory=list)
    ip_addresses: list[str] = Field(default_factory=list)

    @field_validator("cve_ids")
    @classmethod
    def _cve_id_format(cls, value: list[str]) -> list[str]:
        bad = [cve_id for cve_id in value if not CVE_ID_PATTERN.match(cve_id)]
        if bad:
            raise ValueError(f"malformed CVE identifiers: {bad}")
        return value


class DeviceCatalog(BaseModel):
    """Device to CVE and IP association supplied by the user."""

    entries: list[DeviceEntry]

    @model_validator(mode="after")
    def _unique_ids(self) -> "DeviceCatalog":
        seen: set[str] = set()
        for entry in self.entries:
            if entry.device_id in seen:
                raise ValueError(f"duplicate device_id {entry.device_id!r}")
            seen.add(entry.device_id)
        return self

    def get(self, device_id: str) -> DeviceEntry | None:
        return next((e for e in self.entries if e.device_id == device_id), None)


class FeedRecord(BaseModel):
    """A usable NVD feed item."""

    model_config = ConfigDict(frozen=True)

    cve_id: str
    description: str = Field(..., min_length=1)
    cvss: CvssVector


class FeedParseResult(BaseModel):
    records: list[FeedRecord]
    skipped: int = 0


class CveRecord(BaseModel):
    """A vulnerability attached to a catalog device."""

    model_config = ConfigDict(frozen=True)

    cve_id: str
    description: str = Field(..., min_length=1)
    cvss: CvssVector
    device_id: str


class CatalogJoin(BaseModel):
    records: dict[str, list[CveRecord]]
    unresolved: list[str] = Field(default_factory=list)


# =============================================================================
# Text pipeline
# =============================================================================


class PrimedDocument(BaseModel):
    """Stemmed tokens of one description, aligned with their surface forms."""

    cve_id: str
    tokens: list[str]
    surfaces: list[str]

    @property
    def empty(self) -> bool:
        return not self.tokens


class PrimedCorpus(BaseModel):
    documents: list[PrimedDocument]
    stem_map: dict[str, set[str]] = Field(default_factory=dict)

    @property
    def empty_documents(self) -> list[str]:
        return [doc.cve_id for doc in self.documents if doc.empty]


class RankedPhrase(BaseModel):
    """A run of adjacent candidate tokens with its TextRank score."""

    tokens: list[str] = Field(..., min_length=1, description="Surface forms")
    stems: list[str] = Field(..., min_length=1)
    positions: list[int] = Field(..., min_length=1)
    score: float = Field(..., ge=0.0)
    pos_class: PosClass

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


class IoPair(BaseModel):
    """Precondition -> postcondition extracted from one CVE description."""

    model_config = ConfigDict(frozen=True)

    cve_id: str
    input: str = Field(..., min_length=1)
    output: str = Field(..., min_length=1)
    self_target: bool = True

    def serialize(self) -> str:
        prefix = "this:" if self.self_target else ""
        return f"{self.input}->{prefix}{self.output}"

    @classmethod
    def parse(cls, cve_id: str, value: str) -> "IoPair":
        source, sep, target = value.partition("->")
        if not sep:
            raise ValueError(f"not an i/o pair: {value!r}")
        self_target = target.startswith("this:")
        if self_target:
            target = target[len("this:") :]
        return cls(cve_id=cve_id, input=source, output=target, self_target=self_target)


# =============================================================================
# Attack circuit
# =============================================================================


class Vertex(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    kind: VertexKind
    cve_id: str | None = None
    device_id: str | None = None
    phrase: str | None = None


class Edge(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    source: str = Field(..., alias="from")
    target: str = Field(..., alias="to")
    exploitability_weight: float = Field(..., ge=0.0)
    impact_weight: float = Field(..., ge=0.0)
    kind: EdgeKind

    @model_validator(mode="after")
    def _no_self_loop(self) -> "Edge":
        if self.source == self.target:
            raise ValueError(f"self-loop on {self.source}")
        return self


class AttackCircuit(BaseModel):
    """Directed acyclic flow network of attackers, CVE steps and targets."""

    model_config = ConfigDict(populate_by_name=True)

    vertices: list[Vertex]
    edges: list[Edge]
    sources: list[str]
    sinks: list[str]
    devices: dict[str, list[str]] = Field(
        default_factory=dict, description="device_id -> CVE vertex ids"
    )
    dropped_edges: list[tuple[str, str]] = Field(default_factory=list)
    unreachable: list[str] = Field(default_factory=list)

    def vertex_index(self) -> dict[str, Vertex]:
        return {v.id: v for v in self.vertices}


# =============================================================================
# Flows
# =============================================================================


class Arc(BaseModel):
    model_config = ConfigDict(frozen=True)

    tail: int = Field(..., ge=0)
    head: int = Field(..., ge=0)
    capacity: int = Field(..., ge=0)
    cost: int = Field(0, ge=0)


class FlowNetwork(BaseModel):
    """Integer (fixed-point) flow network with a single source and sink."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=2)
    arcs: list[Arc]
    source: int
    sink: int

    @model_validator(mode="after")
    def _valid_endpoints(self) -> "FlowNetwork":
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        for v in (self.source, self.sink):
            if not 0 <= v < self.n:
                raise ValueError(f"vertex {v} out of range")
        for arc in self.arcs:
            if arc.tail >= self.n or arc.head >= self.n:
                raise ValueError(f"arc {arc.tail}->{arc.head} out of range")
        return self


class FlowAssignment(BaseModel):
    flows: list[int]
    total_value: int
    total_cost: int


class FlowPath(BaseModel):
    """One path of a flow decomposition, in network vertex indices."""

    vertices: list[int]
    arcs: list[int]
    flow: int
    unit_cost: int


# =============================================================================
# Traffic and scores
# =============================================================================


class PacketLogRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    time: float
    source: str
    destination: str
    protocol: str
    length: int


class TrafficProfile(BaseModel):
    device_id: str
    uptime_class: UptimeClass
    nu_multiplier: float
    encrypted_fraction: float = Field(..., ge=0.0, le=1.0)
    en_multiplier: float
    blacklist_hits: int = Field(0, ge=0)
    ip_multiplier: float
    window_count: int = Field(0, ge=0)
    static_defaults: bool = False


class CveScore(BaseModel):
    cve_id: str
    device_id: str
    eb: float
    ib: float
    isc_base: float
    i_conf: float
    i_integ: float
    i_avail: float


class DeviceScore(BaseModel):
    device_id: str
    ec: float = 0.0
    ic: float = 0.0
    e: float = Field(0.0, ge=0.0, lt=1.0)
    i: float = Field(0.0, ge=0.0, lt=1.0)
    r_conf: float = Field(0.0, ge=0.0, lt=1.0)
    r_integ: float = Field(0.0, ge=0.0, lt=1.0)
    r_avail: float = Field(0.0, ge=0.0, lt=1.0)
    # Pre-sigmoid arguments, re-aggregated for the network score
    e_arg: float = 0.0
    i_arg: float = 0.0
    multipliers: dict[str, float] = Field(default_factory=dict)
    uptime_class: UptimeClass | None = None


class AttackPath(BaseModel):
    vertices: list[str]
    flow: float
    cost: float | None = None


class NetworkScore(BaseModel):
    e_n: float = Field(0.0, ge=0.0, lt=1.0)
    i_n: float = Field(0.0, ge=0.0, lt=1.0)
    r_conf: float = Field(0.0, ge=0.0, lt=1.0)
    r_integ: float = Field(0.0, ge=0.0, lt=1.0)
    r_avail: float = Field(0.0, ge=0.0, lt=1.0)
    paths: dict[str, list[AttackPath]] = Field(default_factory=dict)


class ScoreReport(BaseModel):
    notes: list[str] = Field(default_factory=list)
    config: dict = Field(default_factory=dict)
    cves: list[CveScore] = Field(default_factory=list)
    devices: list[DeviceScore] = Field(default_factory=list)
    network: NetworkScore = Field(default_factory=NetworkScore)
