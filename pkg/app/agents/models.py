"""Data models for pods, preferences, rosters, attestation and protocol config."""

import hashlib
from dataclasses import dataclass, field
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.datamodel.models import Histogram, Record
from app.dpcore.models import PrivacyBudget
from app.netsim.models import MetricsSnapshot, TranscriptEntry
from app.secretsharing.field import DEFAULT_PRIME
from app.synthgen.models import Distribution, MwemTrace

# Code identity of the enclave program. Its SHA-256 is the pinned measurement.
DEFAULT_ENCLAVE_MANIFEST = (
    b"name=podsynth-enclave\n"
    b"version=1\n"
    b"entry=app.agents.pipeline:generate_synthetic\n"
    b"generators=mwem,measure_generate\n"
    b"release=dp-only\n"
)

ORCHESTRATOR_NODE = 0xFFFE


class PreferenceFile(BaseModel):
    """Which delegates a data provider trusts."""
    trusted_encryption_agents: set[str] = set()
    trusted_computation_agents: set[str] = set()

    @property
    def eligible(self) -> bool:
        return bool(self.trusted_encryption_agents) and bool(self.trusted_computation_agents)


class ResourceEntry(BaseModel):
    """One pod resource and where its preference file lives."""
    pod_id: str
    resource: str
    preference: str
    grants: Optional[str] = None


class ResourceDescription(BaseModel):
    """Data resources the orchestrator is asked to use."""
    entries: list[ResourceEntry]


class AgentSpec(BaseModel):
    """A delegate with its wire node id (two bytes)."""
    name: str
    node_id: int = Field(ge=0, lt=ORCHESTRATOR_NODE)


class AgentRoster(BaseModel):
    """Who plays which role in a run."""
    encryption: list[AgentSpec]
    computation: list[AgentSpec]
    enclave: list[AgentSpec] = []

    @model_validator(mode="after")
    def _check_unique(self):
        agents = self.encryption + self.computation + self.enclave
        if len({a.name for a in agents}) != len(agents):
            raise ValueError("agent names must be unique across roles")
        if len({a.node_id for a in agents}) != len(agents):
            raise ValueError("agent node ids must be unique across roles")
        return self

    @classmethod
    def default(cls, n_encryption: int = 2, n_computation: int = 3) -> "AgentRoster":
        """E1..En on nodes 1000+, C0..Cn-1 on nodes 0.. (player 0 is C0)."""
        return cls(
            encryption=[AgentSpec(name=f"E{i + 1}", node_id=1000 + i) for i in range(n_encryption)],
            computation=[AgentSpec(name=f"C{i}", node_id=i) for i in range(n_computation)],
        )

    def encryption_names(self) -> list[str]:
        return [a.name for a in self.encryption]

    def computation_names(self) -> list[str]:
        return [a.name for a in self.computation]


class AttestationReport(BaseModel):
    """Simulated quote: code measurement bound to a challenge nonce and a channel key."""
    model_config = ConfigDict(frozen=True)

    measurement: bytes = Field(min_length=32, max_length=32)
    nonce: bytes = Field(min_length=16, max_length=16)
    public_key: bytes = Field(min_length=32, max_length=32)
    signature: bytes = Field(min_length=32, max_length=32)

    def to_bytes(self) -> bytes:
        return self.measurement + self.nonce + self.public_key + self.signature

    @classmethod
    def from_bytes(cls, data: bytes) -> "AttestationReport":
        if len(data) != 112:
            raise ValueError(f"attestation report must be 112 bytes, got {len(data)}")
        return cls(measurement=data[:32], nonce=data[32:48], public_key=data[48:80], signature=data[80:])


class AttestationVerdict(BaseModel):
    """Result of verifying a report."""
    allowed: bool
    reason: str
    checks: dict[str, bool]


def manifest_digest(manifest: bytes) -> str:
    return hashlib.sha256(manifest).hexdigest()


class ProtocolConfig(BaseModel):
    """Parameters of one pipeline run."""
    n_computation_agents: int = Field(default=3, ge=1)
    n_encryption_agents: int = Field(default=2, ge=1)
    threshold: Optional[int] = None
    epsilon: float = Field(default=2.0, gt=0)
    iterations: int = Field(default=30, ge=1)
    bins: Optional[int] = Field(default=None, ge=1)
    generator: Literal["mwem", "measure_generate"] = "mwem"
    workload: Literal["two_way", "singletons", "full"] = "two_way"
    fit_iterations: int = Field(default=30, ge=0)
    average_iterates: bool = False
    track_error: bool = True
    synthetic_records: Optional[int] = Field(default=None, ge=0)
    max_domain_cells: Optional[int] = None
    seed: int = Field(default=0, ge=0)
    modulus: int = DEFAULT_PRIME
    transport: Literal["deterministic", "socket"] = "deterministic"
    require_attestation: bool = True
    enclave_manifest: bytes = DEFAULT_ENCLAVE_MANIFEST
    expected_measurement: str = manifest_digest(DEFAULT_ENCLAVE_MANIFEST)

    @model_validator(mode="after")
    def _check_threshold(self):
        honest_majority = (self.n_computation_agents - 1) // 2
        if self.threshold is None:
            self.threshold = honest_majority
        if not 0 <= self.threshold < self.n_computation_agents:
            raise ValueError(
                f"threshold {self.threshold} must lie in [0, {self.n_computation_agents})"
            )
        if self.threshold != honest_majority:
            raise ValueError(
                f"honest-majority sharing with {self.n_computation_agents} agents needs "
                f"t = {honest_majority}, got {self.threshold}"
            )
        return self

    @property
    def t(self) -> int:
        return self.threshold


class PipelineReport(BaseModel):
    """What happened to each participant; exclusions are reported, not raised."""
    assignments: dict[str, str] = {}
    excluded_providers: list[str] = []
    access_denied: list[str] = []
    rejected_contributions: list[str] = []
    computation_agents: list[str] = []
    enclave: Optional[str] = None
    selection_index: Optional[int] = None
    attestation: dict[str, Any] = {}


@dataclass
class PipelineResult:
    """Everything a run returns to the orchestrator."""
    records: list[Record]
    metrics: MetricsSnapshot
    budget: PrivacyBudget
    report: PipelineReport
    trace: Optional[MwemTrace] = None
    distribution: Optional[Distribution] = None
    transcript: list[TranscriptEntry] = field(default_factory=list)
    aggregate: list[Histogram] = field(default_factory=list)
