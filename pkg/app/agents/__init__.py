"""Pipeline roles: pods, matching, encryption and computation agents, enclave, orchestrator."""

from app.agents.attestation import Enclave, SecureChannel, Verifier, attest, measure, verify_attestation
from app.agents.computation import ComputationAgent, EnclaveAgent, joint_random_select, reveal_to
from app.agents.encryption import EncryptionAgent, EncryptionTaskReport, histogram_vector
from app.agents.generation import GenerationOutput, generate_synthetic, workload_marginals
from app.agents.matching import MatchResult, match_agents
from app.agents.models import (
    DEFAULT_ENCLAVE_MANIFEST,
    ORCHESTRATOR_NODE,
    AgentRoster,
    AgentSpec,
    AttestationReport,
    AttestationVerdict,
    PipelineReport,
    PipelineResult,
    PreferenceFile,
    ProtocolConfig,
    ResourceDescription,
    ResourceEntry,
    manifest_digest,
)
from app.agents.pipeline import (
    MPC_PHASES,
    plaintext_aggregate,
    run_central_oracle,
    run_pipeline,
    stream_rng,
)
from app.agents.pods import Pod, build_pods, load_pod, load_resources, save_pod

__all__ = [
    "AgentRoster",
    "AgentSpec",
    "AttestationReport",
    "AttestationVerdict",
    "ComputationAgent",
    "DEFAULT_ENCLAVE_MANIFEST",
    "Enclave",
    "EnclaveAgent",
    "EncryptionAgent",
    "EncryptionTaskReport",
    "GenerationOutput",
    "MPC_PHASES",
    "MatchResult",
    "ORCHESTRATOR_NODE",
    "PipelineReport",
    "PipelineResult",
    "Pod",
    "PreferenceFile",
    "ProtocolConfig",
    "ResourceDescription",
    "ResourceEntry",
    "SecureChannel",
    "Verifier",
    "attest",
    "build_pods",
    "generate_synthetic",
    "histogram_vector",
    "joint_random_select",
    "load_pod",
    "load_resources",
    "manifest_digest",
    "match_agents",
    "measure",
    "plaintext_aggregate",
    "reveal_to",
    "run_central_oracle",
    "run_pipeline",
    "save_pod",
    "stream_rng",
    "verify_attestation",
    "workload_marginals",
]
